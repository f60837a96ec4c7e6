//! Scenario files: a TOML document describing one stand and its economics.
//!
//! ```toml
//! version = 1
//!
//! [meta]
//! name = "high"
//!
//! [yield]              # V(t) = asymptote·[1 − exp(−rate·t)]^shape
//! asymptote = 100.0    # alias `a`
//! rate = 0.027         # alias `m`
//! shape = 3.0          # alias `c`
//! label = "high"
//!
//! [econ]
//! stumpage_price = 500.0
//! establishment_cost = 250.0
//! # bare_land_value defaults from the label: establishment cost for
//! # "high", half of it for "low"
//! annual_overhead = 0.0
//! ```
//!
//! Optional sections are `[plan]` (rotation, response and thinnings),
//! `[price_process]` (u0, rho, z, t0) and `[sweep]` (price and expense
//! multiplier lists). Unknown keys are rejected.

use std::path::Path;

use rotation_core::accounting::conventional_bare_land_value;
use rotation_core::{
    EconParams, ManagementPlan, PriceProcess, ThinningEvent, ThinningResponse, YieldParams,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub price_multipliers: Vec<f64>,
    pub expense_multipliers: Vec<f64>,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub meta: Meta,
    pub yield_params: YieldParams,
    pub econ: EconParams,
    pub plan: Option<ManagementPlan>,
    pub price_process: Option<PriceProcess>,
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    version: u32,
    #[serde(default)]
    meta: Meta,
    #[serde(rename = "yield")]
    yield_params: RawYield,
    econ: RawEcon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plan: Option<RawPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_process: Option<PriceProcess>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<Sweep>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawYield {
    #[serde(alias = "a")]
    asymptote: f64,
    #[serde(alias = "m")]
    rate: f64,
    #[serde(alias = "c")]
    shape: f64,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEcon {
    stumpage_price: f64,
    establishment_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bare_land_value: Option<f64>,
    #[serde(default)]
    annual_overhead: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    rotation: f64,
    #[serde(default)]
    response: ThinningResponse,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    thinnings: Vec<RawThinning>,
}

/// A thinning given either as a removed volume or as a fraction of the
/// standing volume.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThinning {
    age: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    removed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fraction: Option<f64>,
}

fn invalid(section: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("[{section}] {err}"))
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = toml::Deserializer::new(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().trim().to_owned();
        let location = inner
            .span()
            .map(|span| {
                let line = text[..span.start].matches('\n').count() + 1;
                format!(" (line {line})")
            })
            .unwrap_or_default();
        if path == "." || path.is_empty() {
            CliError::Parse(format!("{message}{location}"))
        } else {
            CliError::Parse(format!("at `{path}`: {message}{location}"))
        }
    })?;
    validate(raw)
}

fn validate(raw: RawScenario) -> Result<Scenario, CliError> {
    if raw.version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            raw.version
        )));
    }
    let y = raw.yield_params;
    let yield_params = YieldParams::new(y.asymptote, y.rate, y.shape, y.label)
        .map_err(|e| invalid("yield", e))?;

    let bare_land_value = match raw.econ.bare_land_value {
        Some(v) => v,
        None => conventional_bare_land_value(&yield_params.label, raw.econ.establishment_cost)
            .ok_or_else(|| {
                invalid(
                    "econ",
                    format!(
                        "bare_land_value is required when the yield label is neither \"high\" nor \"low\" (got {:?})",
                        yield_params.label
                    ),
                )
            })?,
    };
    let econ = EconParams::new(
        raw.econ.stumpage_price,
        raw.econ.establishment_cost,
        bare_land_value,
        raw.econ.annual_overhead,
    )
    .map_err(|e| invalid("econ", e))?;

    let plan = raw
        .plan
        .map(|p| resolve_plan(&yield_params, p))
        .transpose()?;
    if let Some(process) = &raw.price_process {
        process.validate().map_err(|e| invalid("price_process", e))?;
    }
    if let Some(sweep) = &raw.sweep {
        let lists = [
            ("price_multipliers", &sweep.price_multipliers),
            ("expense_multipliers", &sweep.expense_multipliers),
        ];
        for (name, list) in lists {
            if list.is_empty() || list.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
                return Err(invalid("sweep", format!("{name} must be a nonempty list of positive numbers")));
            }
        }
    }
    Ok(Scenario {
        meta: raw.meta,
        yield_params,
        econ,
        plan,
        price_process: raw.price_process,
        sweep: raw.sweep,
    })
}

fn resolve_plan(params: &YieldParams, raw: RawPlan) -> Result<ManagementPlan, CliError> {
    let by_fraction = raw.thinnings.iter().filter(|t| t.fraction.is_some()).count();
    for (index, t) in raw.thinnings.iter().enumerate() {
        if t.removed.is_some() == t.fraction.is_some() {
            return Err(invalid(
                "plan",
                format!("thinning #{index} must give exactly one of `removed` or `fraction`"),
            ));
        }
    }
    let plan = if by_fraction == 0 {
        let events = raw
            .thinnings
            .iter()
            .map(|t| ThinningEvent {
                age: t.age,
                removed: t.removed.unwrap_or_default(),
            })
            .collect();
        ManagementPlan::new(raw.rotation, events, raw.response)
    } else if by_fraction == raw.thinnings.len() {
        let schedule: Vec<(f64, f64)> = raw
            .thinnings
            .iter()
            .map(|t| (t.age, t.fraction.unwrap_or_default()))
            .collect();
        ManagementPlan::from_fractions(params, raw.rotation, raw.response, &schedule)
    } else {
        return Err(invalid(
            "plan",
            "thinnings must all use `removed` or all use `fraction`",
        ));
    };
    let plan = plan.map_err(|e| invalid("plan", e))?;
    // Removals beyond the standing volume only show once the trajectory is
    // composed.
    rotation_core::VolumeTrajectory::build(params, &plan, rotation_core::DEFAULT_STEP)
        .map_err(|e| invalid("plan", e))?;
    Ok(plan)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Unreadable {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text)
}

/// TOML text that parses back to `scenario`. Thinnings are written as
/// removed volumes and the bare land value explicitly.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let raw = RawScenario {
        version: SCHEMA_VERSION,
        meta: scenario.meta.clone(),
        yield_params: RawYield {
            asymptote: scenario.yield_params.asymptote,
            rate: scenario.yield_params.rate,
            shape: scenario.yield_params.shape,
            label: scenario.yield_params.label.clone(),
        },
        econ: RawEcon {
            stumpage_price: scenario.econ.stumpage_price,
            establishment_cost: scenario.econ.establishment_cost,
            bare_land_value: Some(scenario.econ.bare_land_value),
            annual_overhead: scenario.econ.annual_overhead,
        },
        plan: scenario.plan.as_ref().map(|p| RawPlan {
            rotation: p.rotation,
            response: p.response,
            thinnings: p
                .thinnings
                .iter()
                .map(|t| RawThinning {
                    age: t.age,
                    removed: Some(t.removed),
                    fraction: None,
                })
                .collect(),
        }),
        price_process: scenario.price_process,
        sweep: scenario.sweep.clone(),
    };
    toml::to_string(&raw).expect("scenario fields are all representable in TOML")
}
