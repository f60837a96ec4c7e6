//! Accrual-basis accounting of one rotation.
//!
//! Capitalization `K(t)` is the bare land value plus the stumpage value of the
//! standing timber. The operating profit rate `dκ/dt` is the stumpage value of
//! growth less overhead, with the establishment expense booked as an impulse
//! at age 0. Harvests book no profit: they only convert standing value, which
//! was already accrued while it grew, into cash.
//!
//! Expectations use a uniform density of time over the rotation, so the
//! expected return rate is `∫ dκ/dt dt / ∫ K dt`.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::growth::{ManagementPlan, VolumeTrajectory, YieldParams, DEFAULT_STEP};

/// Upper end of the break-even search bracket, in years.
pub const BREAK_EVEN_UPPER: f64 = 500.0;

/// Bisection tolerance of the break-even search, in years.
pub const BREAK_EVEN_TOLERANCE: f64 = 1e-6;

/// Monetary inputs, all per acre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    /// $/MBF.
    pub stumpage_price: f64,
    /// $/acre, expensed at the start of each rotation.
    pub establishment_cost: f64,
    /// $/acre, market value of land without timber.
    pub bare_land_value: f64,
    /// $/acre/year.
    pub annual_overhead: f64,
}

impl EconParams {
    pub fn new(
        stumpage_price: f64,
        establishment_cost: f64,
        bare_land_value: f64,
        annual_overhead: f64,
    ) -> Result<Self> {
        let econ = Self {
            stumpage_price,
            establishment_cost,
            bare_land_value,
            annual_overhead,
        };
        econ.validate()?;
        Ok(econ)
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.stumpage_price.is_finite() && self.stumpage_price > 0.0,
            "stumpage_price",
            format!("must be positive, got {}", self.stumpage_price),
        )?;
        for (name, value) in [
            ("establishment_cost", self.establishment_cost),
            ("bare_land_value", self.bare_land_value),
            ("annual_overhead", self.annual_overhead),
        ] {
            require(
                value.is_finite() && value >= 0.0,
                name,
                format!("must be nonnegative, got {value}"),
            )?;
        }
        Ok(())
    }

    /// Every monetary quantity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.scaled_split(factor, factor)
    }

    /// Stumpage price scaled by `price_factor`; establishment cost, overhead
    /// and bare land value by `expense_factor`.
    ///
    /// Bare land value follows the expense side because it is pegged to the
    /// establishment expense in the bundled calibrations.
    pub fn scaled_split(&self, price_factor: f64, expense_factor: f64) -> Self {
        Self {
            stumpage_price: self.stumpage_price * price_factor,
            establishment_cost: self.establishment_cost * expense_factor,
            bare_land_value: self.bare_land_value * expense_factor,
            annual_overhead: self.annual_overhead * expense_factor,
        }
    }
}

/// Bare land value implied by the productivity class: the full establishment
/// expense on `"high"` sites and half of it on `"low"` sites.
pub fn conventional_bare_land_value(label: &str, establishment_cost: f64) -> Option<f64> {
    match label.trim().to_ascii_lowercase().as_str() {
        "high" => Some(establishment_cost),
        "low" => Some(0.5 * establishment_cost),
        _ => None,
    }
}

/// Capitalization at `age`: bare land plus stumpage value of standing timber.
/// At a thinning age the removed timber is already out of the balance sheet.
pub fn capitalization(trajectory: &VolumeTrajectory, econ: &EconParams, age: f64) -> Result<f64> {
    Ok(econ.bare_land_value + econ.stumpage_price * trajectory.volume_at(age)?)
}

/// Operating profit rate at one age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitRate {
    /// $/acre/year.
    pub continuous: f64,
    /// Lump sum booked at this instant, $/acre.
    pub impulse: f64,
}

pub fn operating_profit_rate(
    trajectory: &VolumeTrajectory,
    econ: &EconParams,
    age: f64,
) -> Result<ProfitRate> {
    let growth = trajectory.growth_rate_at(age)?;
    Ok(ProfitRate {
        continuous: econ.stumpage_price * growth - econ.annual_overhead,
        impulse: if age == 0.0 {
            -econ.establishment_cost
        } else {
            0.0
        },
    })
}

/// Profit accrued over one sample interval, as an average rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalAccrual {
    pub start: f64,
    pub end: f64,
    /// $/acre/year, value growth over the interval divided by its length.
    pub rate: f64,
}

/// Sampled accounting of one rotation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccrualLedger {
    pub step: f64,
    pub profit_rate_samples: Vec<IntervalAccrual>,
    /// `(age, $/acre)` lump sums.
    pub impulses: Vec<(f64, f64)>,
    /// `(age, K)` at each trajectory sample.
    pub capitalization_samples: Vec<(f64, f64)>,
}

impl AccrualLedger {
    pub fn build(trajectory: &VolumeTrajectory, econ: &EconParams) -> Result<Self> {
        econ.validate()?;
        let samples = trajectory.samples();
        let mut profit_rate_samples = Vec::with_capacity(samples.len().saturating_sub(1));
        for pair in samples.windows(2) {
            let (start, v_start) = pair[0];
            let (end, _) = pair[1];
            let v_end = trajectory.volume_before(end)?;
            profit_rate_samples.push(IntervalAccrual {
                start,
                end,
                rate: econ.stumpage_price * (v_end - v_start) / (end - start)
                    - econ.annual_overhead,
            });
        }
        let capitalization_samples = samples
            .iter()
            .map(|&(age, volume)| (age, econ.bare_land_value + econ.stumpage_price * volume))
            .collect();
        Ok(Self {
            step: trajectory.step(),
            profit_rate_samples,
            impulses: vec![(0.0, -econ.establishment_cost)],
            capitalization_samples,
        })
    }

    /// Profit accrued over the whole rotation, impulses included ($/acre).
    pub fn integrated_profit(&self) -> f64 {
        let continuous: f64 = self
            .profit_rate_samples
            .iter()
            .map(|s| s.rate * (s.end - s.start))
            .sum();
        continuous + self.impulses.iter().map(|&(_, lump)| lump).sum::<f64>()
    }
}

/// Expected values over one rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationReport {
    pub rotation: f64,
    /// $/acre/year.
    pub expected_profit_rate: f64,
    /// $/acre.
    pub expected_capitalization: f64,
    /// 1/year.
    pub expected_return_rate: f64,
    pub break_even: bool,
}

impl RotationReport {
    fn from_totals(rotation: f64, profit: f64, capital_integral: f64) -> Result<Self> {
        let expected_profit_rate = profit / rotation;
        let expected_capitalization = capital_integral / rotation;
        if expected_capitalization == 0.0 {
            return Err(Error::DivisionGuard("expected capitalization"));
        }
        Ok(Self {
            rotation,
            expected_profit_rate,
            expected_capitalization,
            expected_return_rate: expected_profit_rate / expected_capitalization,
            break_even: expected_profit_rate >= 0.0,
        })
    }
}

/// Expected profit rate, capitalization and return rate over the
/// trajectory's rotation.
pub fn expected_rates(trajectory: &VolumeTrajectory, econ: &EconParams) -> Result<RotationReport> {
    let rotation = trajectory.rotation();
    if !(rotation > 0.0) {
        return Err(Error::Domain(format!("rotation must be positive, got {rotation}")));
    }
    let ledger = AccrualLedger::build(trajectory, econ)?;
    let capital = econ.bare_land_value * rotation
        + econ.stumpage_price * trajectory.integral_to(rotation)?;
    RotationReport::from_totals(rotation, ledger.integrated_profit(), capital)
}

/// Report for the same stand clearcut earlier, at `rotation` no later than
/// the trajectory's own rotation. Thinnings at or after `rotation` are
/// dropped.
pub fn report_at(
    trajectory: &VolumeTrajectory,
    econ: &EconParams,
    rotation: f64,
) -> Result<RotationReport> {
    if !(rotation > 0.0) {
        return Err(Error::Domain(format!("rotation must be positive, got {rotation}")));
    }
    let terminal = trajectory.volume_before(rotation)?;
    let profit = econ.stumpage_price * (terminal + trajectory.removed_before(rotation))
        - econ.establishment_cost
        - econ.annual_overhead * rotation;
    let capital =
        econ.bare_land_value * rotation + econ.stumpage_price * trajectory.integral_to(rotation)?;
    RotationReport::from_totals(rotation, profit, capital)
}

/// Profit accrued over `[from, to)`, thinnings at `from` included.
fn accrued(trajectory: &VolumeTrajectory, econ: &EconParams, from: f64, to: f64) -> Result<f64> {
    let removed: f64 = trajectory
        .events()
        .iter()
        .filter(|e| e.age >= from && e.age < to)
        .map(|e| e.removed)
        .sum();
    let growth = trajectory.volume_before(to)? - trajectory.volume_before(from)? + removed;
    Ok(econ.stumpage_price * growth - econ.annual_overhead * (to - from))
}

/// Expected rates over the window `[phase, phase + τ]` of the periodically
/// repeated rotation. The capitalization integral is recomputed on a grid
/// anchored at the window start rather than reusing the trajectory's
/// cumulative sums.
pub fn expected_rates_from_phase(
    trajectory: &VolumeTrajectory,
    econ: &EconParams,
    phase: f64,
) -> Result<RotationReport> {
    econ.validate()?;
    if !phase.is_finite() {
        return Err(Error::Domain(format!("phase must be finite, got {phase}")));
    }
    let rotation = trajectory.rotation();
    let start = phase.rem_euclid(rotation);
    let width = trajectory.step();
    let mut profit = accrued(trajectory, econ, start, rotation)? - econ.establishment_cost;
    let mut volume_integral = trajectory.integral_fresh(start, rotation, width);
    if start > 0.0 {
        profit += accrued(trajectory, econ, 0.0, start)?;
        volume_integral += trajectory.integral_fresh(0.0, start, width);
    }
    let capital = econ.bare_land_value * rotation + econ.stumpage_price * volume_integral;
    RotationReport::from_totals(rotation, profit, capital)
}

/// Smallest unthinned rotation whose expected profit rate is zero.
pub fn break_even_rotation(params: &YieldParams, econ: &EconParams) -> Result<f64> {
    params.validate()?;
    econ.validate()?;
    if econ.establishment_cost == 0.0 && econ.annual_overhead == 0.0 {
        return Ok(0.0);
    }
    if econ.stumpage_price * params.asymptote <= econ.establishment_cost {
        return Err(Error::NoBreakEven {
            upper: BREAK_EVEN_UPPER,
        });
    }
    // Sign of the expected profit rate equals the sign of the rotation total.
    let total = |tau: f64| {
        econ.stumpage_price * params.volume_unchecked(tau)
            - econ.establishment_cost
            - econ.annual_overhead * tau
    };
    let scan = DEFAULT_STEP;
    let mut lo = 0.0;
    let mut hi = scan;
    loop {
        if hi > BREAK_EVEN_UPPER {
            return Err(Error::NoBreakEven {
                upper: BREAK_EVEN_UPPER,
            });
        }
        if total(hi) >= 0.0 {
            break;
        }
        lo = hi;
        hi += scan;
    }
    while hi - lo > BREAK_EVEN_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if total(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Report for an unthinned rotation of length `rotation`.
pub fn evaluate_unthinned(
    params: &YieldParams,
    econ: &EconParams,
    rotation: f64,
    step: f64,
) -> Result<RotationReport> {
    let plan = ManagementPlan::unthinned(rotation)?;
    let trajectory = VolumeTrajectory::build(params, &plan, step)?;
    expected_rates(&trajectory, econ)
}
