//! Stand volume: the saturating yield curve `V(t) = a·[1 − exp(−m·t)]^c`,
//! thinning responses, and the piecewise volume trajectory of a managed
//! rotation.
//!
//! A thinning at age `t_k` removing `h` from a standing volume `V_k` acts on
//! the unthinned curve from `t_k` onward as a multiplicative factor of the
//! removed fraction `q = h / V_k`:
//!
//! - constant response: `(1 − q)·(1 + q·δ·ramp)`, where `ramp` rises linearly
//!   from 0 to 1 over [`RESPONSE_LAG`] years after the thinning, so that one
//!   year after the event the volume is exactly `V(t+1)·(1 − q)·(1 + q·δ)`;
//! - decaying response: `1 − q·exp(−d·Δt)` with `Δt` the time since thinning.
//!
//! Both factors equal `1 − q` at the thinning instant, so the volume drops by
//! exactly the removal. Factors of successive thinnings multiply.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::quad;

/// Default sampling interval of a trajectory, in years.
pub const DEFAULT_STEP: f64 = 0.1;

/// Years over which the constant-response growth boost builds up.
pub const RESPONSE_LAG: f64 = 1.0;

/// Relative slack on `removed ≤ standing` absorbing rounding.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Parameters of `V(t) = a·[1 − exp(−m·t)]^c` for one productivity class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldParams {
    /// Asymptotic volume `a` (MBF/acre).
    pub asymptote: f64,
    /// Rate constant `m` (1/year).
    pub rate: f64,
    /// Shape exponent `c`.
    pub shape: f64,
    /// Productivity class tag, e.g. `"high"` or `"low"`.
    pub label: String,
}

impl YieldParams {
    pub fn new(asymptote: f64, rate: f64, shape: f64, label: impl Into<String>) -> Result<Self> {
        let params = Self {
            asymptote,
            rate,
            shape,
            label: label.into(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.asymptote.is_finite() && self.asymptote > 0.0,
            "asymptote",
            format!("must be positive and finite, got {}", self.asymptote),
        )?;
        require(
            self.rate.is_finite() && self.rate > 0.0,
            "rate",
            format!("must be positive and finite, got {}", self.rate),
        )?;
        require(
            self.shape.is_finite() && self.shape > 0.0,
            "shape",
            format!("must be positive and finite, got {}", self.shape),
        )
    }

    /// Standing volume at `age` (MBF/acre).
    pub fn volume(&self, age: f64) -> Result<f64> {
        check_age(age)?;
        Ok(self.volume_unchecked(age))
    }

    /// Growth rate `dV/dt` at `age` (MBF/acre/year).
    ///
    /// At age 0 the slope is `a·m` for `c = 1`, zero for `c > 1`, and
    /// `+∞` for `c < 1`; the infinite value is the one-sided limit and only
    /// ever appears at age 0.
    pub fn volume_derivative(&self, age: f64) -> Result<f64> {
        check_age(age)?;
        Ok(self.derivative_unchecked(age))
    }

    pub(crate) fn volume_unchecked(&self, age: f64) -> f64 {
        let closure = -(-self.rate * age).exp_m1();
        self.asymptote * closure.powf(self.shape)
    }

    pub(crate) fn derivative_unchecked(&self, age: f64) -> f64 {
        let decay = (-self.rate * age).exp();
        let closure = -(-self.rate * age).exp_m1();
        if closure == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => self.asymptote * self.rate,
                _ => 0.0,
            };
        }
        self.asymptote * self.shape * self.rate * decay * closure.powf(self.shape - 1.0)
    }
}

fn check_age(age: f64) -> Result<()> {
    if age.is_nan() || age < 0.0 {
        return Err(Error::Domain(format!("age must be nonnegative, got {age}")));
    }
    Ok(())
}

/// A thinning: `removed` MBF/acre harvested at stand age `age`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinningEvent {
    pub age: f64,
    pub removed: f64,
}

/// How residual growth responds to a thinning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThinningResponse {
    /// Permanent correction with growth-boost parameter `delta`.
    Constant { delta: f64 },
    /// Removal effect fading at `decay` per year after the thinning.
    Decaying { decay: f64 },
}

impl Default for ThinningResponse {
    fn default() -> Self {
        ThinningResponse::Constant { delta: 0.0 }
    }
}

impl ThinningResponse {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThinningResponse::Constant { delta } => require(
                delta.is_finite() && delta >= 0.0,
                "delta",
                format!("must be nonnegative, got {delta}"),
            ),
            ThinningResponse::Decaying { decay } => require(
                decay.is_finite() && decay >= 0.0,
                "decay",
                format!("must be nonnegative, got {decay}"),
            ),
        }
    }

    /// Multiplier on the unthinned volume `elapsed` years after a thinning
    /// of fraction `fraction`.
    fn factor(&self, fraction: f64, elapsed: f64) -> f64 {
        match *self {
            ThinningResponse::Constant { delta } => {
                let ramp = (elapsed / RESPONSE_LAG).min(1.0);
                (1.0 - fraction) * (1.0 + fraction * delta * ramp)
            }
            ThinningResponse::Decaying { decay } => {
                1.0 - fraction * (-decay * elapsed).exp()
            }
        }
    }

    /// Right derivative of [`Self::factor`] with respect to time.
    fn factor_rate(&self, fraction: f64, elapsed: f64) -> f64 {
        match *self {
            ThinningResponse::Constant { delta } => {
                if elapsed < RESPONSE_LAG {
                    (1.0 - fraction) * fraction * delta / RESPONSE_LAG
                } else {
                    0.0
                }
            }
            ThinningResponse::Decaying { decay } => {
                fraction * decay * (-decay * elapsed).exp()
            }
        }
    }
}

fn thinning_fraction(standing: f64, removed: f64) -> Result<f64> {
    if standing == 0.0 {
        return Err(Error::DivisionGuard("standing volume at thinning"));
    }
    if !(removed > 0.0) {
        return Err(Error::Domain(format!(
            "removed volume must be positive, got {removed}"
        )));
    }
    if removed > standing * (1.0 + FEASIBILITY_SLACK) {
        return Err(Error::InfeasibleThinning {
            index: 0,
            age: f64::NAN,
            removed,
            standing,
        });
    }
    Ok((removed / standing).min(1.0))
}

/// Next-step volume after a thinning under the constant response:
/// `V(t+1)·[1 − h/V(t)]·[1 + (h/V(t))·δ]`.
pub fn apply_thinning_constant(
    pre_volume_next: f64,
    pre_volume_now: f64,
    removed: f64,
    delta: f64,
) -> Result<f64> {
    if pre_volume_next < 0.0 {
        return Err(Error::Domain("next-step volume must be nonnegative".into()));
    }
    ThinningResponse::Constant { delta }.validate()?;
    let q = thinning_fraction(pre_volume_now, removed)?;
    Ok(pre_volume_next * (1.0 - q) * (1.0 + q * delta))
}

/// Volume `elapsed` years after a thinning under the decaying response:
/// `V(t+Δt)·{1 − (h/V(t))·exp(−d·Δt)}`.
pub fn apply_thinning_decaying(
    pre_volume_next: f64,
    pre_volume_at_thinning: f64,
    removed: f64,
    decay: f64,
    elapsed: f64,
) -> Result<f64> {
    if pre_volume_next < 0.0 {
        return Err(Error::Domain("next-step volume must be nonnegative".into()));
    }
    if elapsed.is_nan() || elapsed < 0.0 {
        return Err(Error::Domain(format!(
            "elapsed time must be nonnegative, got {elapsed}"
        )));
    }
    ThinningResponse::Decaying { decay }.validate()?;
    let q = thinning_fraction(pre_volume_at_thinning, removed)?;
    Ok(pre_volume_next * (1.0 - q * (-decay * elapsed).exp()))
}

/// Rotation age plus an ordered list of thinnings and their response model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagementPlan {
    pub rotation: f64,
    pub thinnings: Vec<ThinningEvent>,
    pub response: ThinningResponse,
}

impl ManagementPlan {
    pub fn new(
        rotation: f64,
        thinnings: Vec<ThinningEvent>,
        response: ThinningResponse,
    ) -> Result<Self> {
        let plan = Self {
            rotation,
            thinnings,
            response,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Clearcut at `rotation` with no thinnings.
    pub fn unthinned(rotation: f64) -> Result<Self> {
        Self::new(rotation, Vec::new(), ThinningResponse::default())
    }

    /// Plan whose thinnings are given as `(age, fraction of standing volume)`;
    /// removed volumes are resolved against the trajectory left by earlier
    /// thinnings.
    pub fn from_fractions(
        params: &YieldParams,
        rotation: f64,
        response: ThinningResponse,
        schedule: &[(f64, f64)],
    ) -> Result<Self> {
        let mut corrections: Vec<Correction> = Vec::with_capacity(schedule.len());
        let mut thinnings = Vec::with_capacity(schedule.len());
        for (index, &(age, fraction)) in schedule.iter().enumerate() {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "fraction",
                    reason: format!("thinning #{index}: must lie in (0, 1], got {fraction}"),
                });
            }
            check_age(age)?;
            let standing = corrected_volume(params, &response, &corrections, age, false);
            thinnings.push(ThinningEvent {
                age,
                removed: fraction * standing,
            });
            corrections.push(Correction { age, fraction });
        }
        Self::new(rotation, thinnings, response)
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.rotation.is_finite() && self.rotation > 0.0,
            "rotation",
            format!("must be positive and finite, got {}", self.rotation),
        )?;
        self.response.validate()?;
        let mut previous = 0.0;
        for (index, event) in self.thinnings.iter().enumerate() {
            require(
                event.age.is_finite() && event.age > previous,
                "thinnings",
                format!(
                    "thinning #{index} at age {} must be positive and later than the previous one",
                    event.age
                ),
            )?;
            require(
                event.age < self.rotation,
                "thinnings",
                format!(
                    "thinning #{index} at age {} is not before the rotation age {}",
                    event.age, self.rotation
                ),
            )?;
            require(
                event.removed.is_finite() && event.removed > 0.0,
                "thinnings",
                format!(
                    "thinning #{index} must remove a positive volume, got {}",
                    event.removed
                ),
            )?;
            previous = event.age;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Correction {
    age: f64,
    fraction: f64,
}

/// Volume under corrections at `age`. With `inclusive`, a thinning exactly at
/// `age` counts as already applied (right limit); otherwise it does not.
fn corrected_volume(
    params: &YieldParams,
    response: &ThinningResponse,
    corrections: &[Correction],
    age: f64,
    inclusive: bool,
) -> f64 {
    let mut volume = params.volume_unchecked(age);
    for c in corrections {
        if c.age < age || (inclusive && c.age == age) {
            volume *= response.factor(c.fraction, age - c.age);
        }
    }
    volume
}

/// Per-thinning record kept by a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub age: f64,
    pub removed: f64,
    /// Standing volume immediately before the thinning.
    pub standing: f64,
    /// `removed / standing`.
    pub fraction: f64,
}

/// Sampled volume over `[0, rotation]` of one managed rotation.
///
/// Samples sit on multiples of `step` plus every breakpoint of the growth law
/// (thinning ages, end of a constant-response ramp, the rotation age). At a
/// thinning age the sample holds the post-thinning volume; the pre-thinning
/// volume is that plus the recorded removal.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTrajectory {
    params: YieldParams,
    response: ThinningResponse,
    rotation: f64,
    step: f64,
    samples: Vec<(f64, f64)>,
    events: Vec<EventRecord>,
    corrections: Vec<Correction>,
    /// Integral of volume from 0 to each sample age.
    cumulative: Vec<f64>,
}

/// Composes the yield curve and the plan's thinnings over `[0, rotation]`.
pub fn build_trajectory(
    params: &YieldParams,
    plan: &ManagementPlan,
    step: f64,
) -> Result<VolumeTrajectory> {
    VolumeTrajectory::build(params, plan, step)
}

impl VolumeTrajectory {
    pub fn build(params: &YieldParams, plan: &ManagementPlan, step: f64) -> Result<Self> {
        params.validate()?;
        plan.validate()?;
        require(
            step.is_finite() && step > 0.0,
            "step",
            format!("must be positive and finite, got {step}"),
        )?;

        let response = plan.response;
        let mut corrections = Vec::with_capacity(plan.thinnings.len());
        let mut events = Vec::with_capacity(plan.thinnings.len());
        for (index, event) in plan.thinnings.iter().enumerate() {
            let standing = corrected_volume(params, &response, &corrections, event.age, false);
            let fraction = thinning_fraction(standing, event.removed).map_err(|_| {
                Error::InfeasibleThinning {
                    index,
                    age: event.age,
                    removed: event.removed,
                    standing,
                }
            })?;
            corrections.push(Correction {
                age: event.age,
                fraction,
            });
            events.push(EventRecord {
                age: event.age,
                removed: event.removed,
                standing,
                fraction,
            });
        }

        let rotation = plan.rotation;
        let mut breakpoints = vec![0.0, rotation];
        for c in &corrections {
            breakpoints.push(c.age);
            if matches!(response, ThinningResponse::Constant { .. }) && c.age + RESPONSE_LAG < rotation
            {
                breakpoints.push(c.age + RESPONSE_LAG);
            }
        }
        let grid_count = (rotation / step).floor() as usize;
        let near = |x: f64, y: f64| (x - y).abs() <= 1e-9 * step;
        let mut ages: Vec<f64> = (1..=grid_count)
            .map(|i| i as f64 * step)
            .filter(|&t| t < rotation && !breakpoints.iter().any(|&b| near(t, b)))
            .collect();
        ages.extend_from_slice(&breakpoints);
        ages.sort_by(f64::total_cmp);
        ages.dedup();

        let mut trajectory = Self {
            params: params.clone(),
            response,
            rotation,
            step,
            samples: Vec::with_capacity(ages.len()),
            events,
            corrections,
            cumulative: Vec::with_capacity(ages.len()),
        };
        let mut running = 0.0;
        let mut previous = 0.0;
        for &age in &ages {
            if age > previous {
                running += quad::panel_at(previous, age, trajectory.origin(), |t| trajectory.eval(t, true));
            }
            trajectory.samples.push((age, trajectory.eval(age, true)));
            trajectory.cumulative.push(running);
            previous = age;
        }
        Ok(trajectory)
    }

    fn eval(&self, age: f64, inclusive: bool) -> f64 {
        corrected_volume(&self.params, &self.response, &self.corrections, age, inclusive)
    }

    fn check_in_rotation(&self, age: f64) -> Result<()> {
        if age.is_nan() || age < 0.0 || age > self.rotation {
            return Err(Error::Domain(format!(
                "age {age} outside rotation [0, {}]",
                self.rotation
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> &YieldParams {
        &self.params
    }

    pub fn response(&self) -> ThinningResponse {
        self.response
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `(age, volume)` pairs, ages strictly increasing from 0 to the rotation.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Standing volume at `age`, after any thinning happening at `age`.
    pub fn volume_at(&self, age: f64) -> Result<f64> {
        self.check_in_rotation(age)?;
        Ok(self.eval(age, true))
    }

    /// Standing volume just before `age` (pre-thinning at a thinning age).
    pub fn volume_before(&self, age: f64) -> Result<f64> {
        self.check_in_rotation(age)?;
        Ok(self.eval(age, false))
    }

    /// Right derivative of the trajectory's volume at `age`.
    pub fn growth_rate_at(&self, age: f64) -> Result<f64> {
        self.check_in_rotation(age)?;
        let base = self.params.volume_unchecked(age);
        let slope = self.params.derivative_unchecked(age);
        let active: Vec<(f64, f64)> = self
            .corrections
            .iter()
            .filter(|c| c.age <= age)
            .map(|c| {
                let elapsed = age - c.age;
                (
                    self.response.factor(c.fraction, elapsed),
                    self.response.factor_rate(c.fraction, elapsed),
                )
            })
            .collect();
        let product: f64 = active.iter().map(|&(f, _)| f).product();
        let mut rate = slope * product;
        for (k, &(_, df)) in active.iter().enumerate() {
            let others: f64 = active
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &(f, _))| f)
                .product();
            rate += base * df * others;
        }
        Ok(rate)
    }

    /// Total volume removed by thinnings strictly before `age`.
    pub fn removed_before(&self, age: f64) -> f64 {
        self.events
            .iter()
            .filter(|e| e.age < age)
            .map(|e| e.removed)
            .sum()
    }

    /// Integral of standing volume over `[0, age]` (MBF·year/acre).
    pub fn integral_to(&self, age: f64) -> Result<f64> {
        self.check_in_rotation(age)?;
        let idx = self.samples.partition_point(|&(t, _)| t <= age);
        // idx ≥ 1 because the first sample is at age 0.
        let (t_left, _) = self.samples[idx - 1];
        let partial = if age > t_left {
            quad::panel_at(t_left, age, self.origin(), |t| self.eval(t, true))
        } else {
            0.0
        };
        Ok(self.cumulative[idx - 1] + partial)
    }

    /// Integral of standing volume over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi < lo {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(self.integral_to(hi)? - self.integral_to(lo)?)
    }

    /// Volume grows like `age^shape` from planting; quadrature panels that
    /// start there need the endpoint treatment.
    fn origin(&self) -> Option<(f64, f64)> {
        Some((0.0, self.params.shape))
    }

    /// Ages at which the growth law is not smooth, including 0 and the
    /// rotation age.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut points = vec![0.0, self.rotation];
        for c in &self.corrections {
            points.push(c.age);
            if matches!(self.response, ThinningResponse::Constant { .. })
                && c.age + RESPONSE_LAG < self.rotation
            {
                points.push(c.age + RESPONSE_LAG);
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// Integral of volume over `[lo, hi]` by a fresh composite rule, split
    /// at breakpoints, independent of the stored sample grid.
    pub(crate) fn integral_fresh(&self, lo: f64, hi: f64, max_width: f64) -> f64 {
        let mut edges = vec![lo];
        edges.extend(self.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
        edges.push(hi);
        edges
            .windows(2)
            .map(|w| quad::composite(w[0], w[1], max_width, self.origin(), |t| self.eval(t, true)))
            .sum()
    }
}
