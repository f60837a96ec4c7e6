//! First-order autoregressive price evolution.
//!
//! The recursion `u(t) = u0 + ρ·u(t−1)` has the continuous analogue
//!
//! ```text
//! u(t) = u0·[1 + ∫_{t0}^{t} z·ρ^{z(q−t0)} dq] = u0·[1 + (ρ^{z(t−t0)} − 1)/ln ρ]
//! ```
//!
//! and, with phases uniformly distributed over a window `[b, b+τ]`, the
//! expected price level
//!
//! ```text
//! ⟨u⟩ = u0·[1 − 1/ln ρ + ρ^{z(b−t0)}·(ρ^{zτ} − 1)/(zτ·(ln ρ)²)].
//! ```
//!
//! The window average multiplies every monetary quantity of the rotation
//! alike, so shifting the window scales expected profit rate and expected
//! capitalization by the same factor and leaves the return rate unchanged.
//!
//! The discrete recursion and the continuous form are not the same sequence;
//! all expectations here use the continuous form, and [`ar1_step`] serves
//! sampling checks.

use serde::{Deserialize, Serialize};

use crate::accounting::{expected_rates, EconParams, RotationReport};
use crate::error::{require, Error, Result};
use crate::growth::VolumeTrajectory;

/// Below this `|ln ρ|` the closed forms switch to their series expansion.
pub const NEAR_UNIT_LOG: f64 = 1e-6;

/// Relative tolerance of the invariance verification.
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;

/// One step of the recursion `u0 + ρ·previous`.
pub fn ar1_step(intercept: f64, coefficient: f64, previous: f64) -> f64 {
    intercept + coefficient * previous
}

/// `steps + 1` values of the recursion starting at `start`.
pub fn ar1_path(intercept: f64, coefficient: f64, start: f64, steps: usize) -> Vec<f64> {
    std::iter::successors(Some(start), |&u| Some(ar1_step(intercept, coefficient, u)))
        .take(steps + 1)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceProcess {
    /// Initial price level.
    pub u0: f64,
    /// Autoregression coefficient.
    pub rho: f64,
    /// Time-scale factor (1/year).
    pub z: f64,
    /// Origin time (years).
    pub t0: f64,
}

/// `expm1(x)/x`, continuous at 0.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

/// `(e^x − 1 − x)/x²`, continuous at 0.
fn expm1_excess(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        0.5 + x / 6.0 + x * x / 24.0 + x.powi(3) / 120.0 + x.powi(4) / 720.0
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

/// Mean over `x ∈ [a, a+t]` of `(e^{xL} − 1)/L`, i.e.
/// `−1/L + e^{aL}(e^{tL} − 1)/(t L²)`, written as `a·E(aL)·E(tL) + t·X(tL)`
/// so that no two terms cancel.
fn window_growth(a: f64, t: f64, l: f64) -> f64 {
    a * expm1_ratio(a * l) * expm1_ratio(t * l) + t * expm1_excess(t * l)
}

/// Second-order expansion of [`window_growth`] in `L`.
fn window_growth_series(a: f64, t: f64, l: f64) -> f64 {
    (a + t / 2.0)
        + l * (a * a / 2.0 + a * t / 2.0 + t * t / 6.0)
        + l * l * (a.powi(3) / 6.0 + a * a * t / 4.0 + a * t * t / 6.0 + t.powi(3) / 24.0)
}

impl PriceProcess {
    pub fn new(u0: f64, rho: f64, z: f64, t0: f64) -> Result<Self> {
        let process = Self { u0, rho, z, t0 };
        process.validate()?;
        Ok(process)
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.u0.is_finite() && self.u0 > 0.0,
            "u0",
            format!("must be positive, got {}", self.u0),
        )?;
        require(
            self.rho.is_finite() && self.rho > 0.0,
            "rho",
            format!("must be positive, got {}", self.rho),
        )?;
        if self.rho == 1.0 {
            return Err(Error::SingularParameter(self.rho));
        }
        require(
            self.z.is_finite() && self.z > 0.0,
            "z",
            format!("must be positive, got {}", self.z),
        )?;
        require(self.t0.is_finite(), "t0", "must be finite")
    }

    fn log_rho(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.rho.ln())
    }

    pub fn ar1_step(&self, previous: f64) -> f64 {
        ar1_step(self.u0, self.rho, previous)
    }

    /// Price level at calendar time `t ≥ t0`.
    pub fn price_level(&self, t: f64) -> Result<f64> {
        let l = self.log_rho()?;
        if !(t >= self.t0) {
            return Err(Error::Domain(format!(
                "time {t} precedes the process origin {}",
                self.t0
            )));
        }
        let x = self.z * (t - self.t0);
        let growth = if l.abs() < NEAR_UNIT_LOG {
            x * (1.0 + x * l / 2.0 + x * x * l * l / 6.0)
        } else {
            x * expm1_ratio(x * l)
        };
        Ok(self.u0 * (1.0 + growth))
    }

    /// Mean price level over the window `[b, b + tau]`.
    pub fn expected_price(&self, b: f64, tau: f64) -> Result<f64> {
        let l = self.log_rho()?;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("window length must be positive, got {tau}")));
        }
        if !(b >= self.t0) {
            return Err(Error::Domain(format!(
                "window start {b} precedes the process origin {}",
                self.t0
            )));
        }
        let a = self.z * (b - self.t0);
        let t = self.z * tau;
        let growth = if l.abs() < NEAR_UNIT_LOG {
            window_growth_series(a, t, l)
        } else {
            window_growth(a, t, l)
        };
        Ok(self.u0 * (1.0 + growth))
    }

    /// Factor by which expected profit rate and expected capitalization
    /// change when the observation window moves from `b` to `b_star`.
    pub fn window_prefactor(&self, b: f64, b_star: f64, tau: f64) -> Result<f64> {
        Ok(self.expected_price(b_star, tau)? / self.expected_price(b, tau)?)
    }

    /// Monetary multiplier of a window starting at `b`, relative to the
    /// price level `u0` at which the economic inputs are quoted.
    pub fn window_multiplier(&self, b: f64, tau: f64) -> Result<f64> {
        Ok(self.expected_price(b, tau)? / self.u0)
    }
}

/// Expected rates when every monetary input evolves with `process` and the
/// rotation is observed over the window starting at `b`.
pub fn evolving_rates(
    trajectory: &VolumeTrajectory,
    econ: &EconParams,
    process: &PriceProcess,
    b: f64,
) -> Result<RotationReport> {
    let multiplier = process.window_multiplier(b, trajectory.rotation())?;
    expected_rates(trajectory, &econ.scaled(multiplier))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub offset: f64,
    /// Closed-form window prefactor from the reference start to `offset`.
    pub prefactor: f64,
    pub expected_profit_rate: f64,
    pub expected_capitalization: f64,
    pub expected_return_rate: f64,
    /// Profit rate relative to the reference window.
    pub profit_ratio: f64,
    /// Capitalization relative to the reference window.
    pub capitalization_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub reference_start: f64,
    /// Report under stationary prices.
    pub stationary: RotationReport,
    pub rows: Vec<InvarianceRow>,
    /// Largest relative deviation of a ratio from its prefactor.
    pub max_scaling_deviation: f64,
    /// Largest relative deviation of a return rate from the stationary one.
    pub max_return_deviation: f64,
    pub holds: bool,
}

fn relative_gap(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
    }
}

/// Re-evaluates the rotation with evolving prices over windows starting at
/// each offset and checks that profit rate and capitalization scale by the
/// window prefactor while the return rate stays at its stationary value.
pub fn verify_return_rate_invariance(
    trajectory: &VolumeTrajectory,
    econ: &EconParams,
    process: &PriceProcess,
    reference_start: f64,
    offsets: &[f64],
) -> Result<InvarianceReport> {
    let tau = trajectory.rotation();
    let stationary = expected_rates(trajectory, econ)?;
    let reference = evolving_rates(trajectory, econ, process, reference_start)?;
    let mut rows = Vec::with_capacity(offsets.len());
    let mut max_scaling_deviation: f64 = 0.0;
    let mut max_return_deviation: f64 = 0.0;
    for &offset in offsets {
        let report = evolving_rates(trajectory, econ, process, offset)?;
        let prefactor = process.window_prefactor(reference_start, offset, tau)?;
        let profit_ratio = report.expected_profit_rate / reference.expected_profit_rate;
        let capitalization_ratio =
            report.expected_capitalization / reference.expected_capitalization;
        max_scaling_deviation = max_scaling_deviation
            .max(relative_gap(profit_ratio, prefactor))
            .max(relative_gap(capitalization_ratio, prefactor));
        max_return_deviation = max_return_deviation.max(relative_gap(
            report.expected_return_rate,
            stationary.expected_return_rate,
        ));
        rows.push(InvarianceRow {
            offset,
            prefactor,
            expected_profit_rate: report.expected_profit_rate,
            expected_capitalization: report.expected_capitalization,
            expected_return_rate: report.expected_return_rate,
            profit_ratio,
            capitalization_ratio,
        });
    }
    Ok(InvarianceReport {
        reference_start,
        stationary,
        rows,
        max_scaling_deviation,
        max_return_deviation,
        holds: max_scaling_deviation <= INVARIANCE_TOLERANCE
            && max_return_deviation <= INVARIANCE_TOLERANCE,
    })
}
