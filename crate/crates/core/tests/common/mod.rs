#![allow(dead_code)]

use rotation_core::{EconParams, YieldParams};

/// Adaptive Simpson quadrature, independent of the library's Gauss rule.
/// `tol` is relative to the magnitude of the first whole-interval estimate.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(m), f(hi));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    step(f, lo, hi, fa, fm, fb, whole, tol * scale, 28)
}

/// Plain Richards curve, written out again so tests do not lean on the
/// library for their reference values.
pub fn richards(a: f64, m: f64, c: f64, t: f64) -> f64 {
    a * (1.0 - (-m * t).exp()).powf(c)
}

pub fn rel(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

pub fn high() -> (YieldParams, EconParams) {
    (
        YieldParams::new(100.0, 0.027, 3.0, "high").unwrap(),
        EconParams::new(500.0, 250.0, 250.0, 0.0).unwrap(),
    )
}

pub fn low() -> (YieldParams, EconParams) {
    (
        YieldParams::new(100.0, 0.027, 4.3, "low").unwrap(),
        EconParams::new(500.0, 250.0, 125.0, 0.0).unwrap(),
    )
}
