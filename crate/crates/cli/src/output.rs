//! Number formatting and file emission. Every number leaves the program with
//! 12 significant digits, so output files are reproducible byte for byte.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits (ties to even on the exact binary
/// value), written positionally for moderate magnitudes and in scientific
/// notation otherwise. Trailing zeros are dropped.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent in scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if (-6..SIGNIFICANT_DIGITS as i32).contains(&exponent) {
        let point = exponent + 1;
        let s = if point <= 0 {
            format!("0.{}{digits}", "0".repeat((-point) as usize))
        } else {
            let (int, frac) = digits.split_at(point as usize);
            format!("{int}.{frac}")
        };
        trim_fraction(&s)
    } else {
        let (lead, rest) = digits.split_at(1);
        let m = trim_fraction(&format!("{lead}.{rest}"));
        format!("{m}e{exponent}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

/// `x` rounded to 12 significant digits, as a number.
pub fn round_number(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

fn round_value(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(rounded) = n.as_f64().map(round_number).and_then(serde_json::Number::from_f64) {
                    *n = rounded;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn output_error(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_owned(),
        message: err.to_string(),
    }
}

/// Creates the output directory if needed.
pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))
}

/// Writes one header row and numeric rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    writer.write_record(header).map_err(|e| output_error(path, e))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writer
            .write_record(row.iter().map(|&x| format_number(x)))
            .map_err(|e| output_error(path, e))?;
    }
    writer.flush().map_err(|e| output_error(path, e))?;
    Ok(path.to_owned())
}

/// Pretty-printed JSON with every float rounded to 12 significant digits.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let mut tree = serde_json::to_value(value).map_err(|e| output_error(path, e))?;
    round_value(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree).map_err(|e| output_error(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| output_error(path, e))?;
    Ok(path.to_owned())
}
