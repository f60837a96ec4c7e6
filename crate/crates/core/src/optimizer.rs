//! Rotation and thinning-schedule search, the stylized one-line model of the
//! optimal rotation, and price/expense sensitivity sweeps.
//!
//! Rotation search is a coarse scan on a one-year grid followed by golden
//! section refinement around the best grid point. Ties on the objective are
//! broken toward the shorter rotation. Thinning search is exhaustive over a
//! grid of thinning ages and intensities, with the rotation re-optimized for
//! every schedule.

use serde::{Deserialize, Serialize};

use crate::accounting::{report_at, EconParams, RotationReport};
use crate::error::{require, Error, Result};
use crate::growth::{ManagementPlan, ThinningEvent, ThinningResponse, VolumeTrajectory, YieldParams, DEFAULT_STEP};
use crate::prices::PriceProcess;

/// Relative tolerance under which two objective values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Width of the final golden-section bracket, in years.
pub const REFINE_RESOLUTION: f64 = 0.01;

/// Trajectory sampling step of the thinning search. Four-node Gauss panels
/// of half a year are still accurate far beyond the objective differences
/// the search resolves, and the exhaustive two-thinning grid needs the speed.
pub const THINNING_SEARCH_STEP: f64 = 0.5;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    ReturnRate,
    ProfitRate,
}

impl Objective {
    pub fn of(&self, report: &RotationReport) -> f64 {
        match self {
            Objective::ReturnRate => report.expected_return_rate,
            Objective::ProfitRate => report.expected_profit_rate,
        }
    }
}

/// Grids of the rotation search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationSearch {
    /// Longest rotation considered (years); the range is `(0, tau_max]`.
    pub tau_max: f64,
    pub coarse_step: f64,
    pub resolution: f64,
    /// Sampling step of the volume trajectory.
    pub step: f64,
}

impl Default for RotationSearch {
    fn default() -> Self {
        Self {
            tau_max: 300.0,
            coarse_step: 1.0,
            resolution: REFINE_RESOLUTION,
            step: DEFAULT_STEP,
        }
    }
}

impl RotationSearch {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_max", self.tau_max),
            ("coarse_step", self.coarse_step),
            ("resolution", self.resolution),
            ("step", self.step),
        ] {
            require(v.is_finite() && v > 0.0, name, format!("must be positive, got {v}"))?;
        }
        require(
            self.coarse_step <= self.tau_max,
            "coarse_step",
            "must not exceed tau_max",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub rotation: f64,
    pub thinnings: Vec<ThinningEvent>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub objective: Objective,
    pub best_plan: ManagementPlan,
    pub best_report: RotationReport,
    pub search_trace: Vec<TraceEntry>,
    /// False when the objective is negative at every candidate.
    pub profitable: bool,
    /// Coarse candidates that tied with the incumbent and lost to it.
    pub ties: usize,
}

impl OptimizationResult {
    pub fn best_objective(&self) -> f64 {
        self.objective.of(&self.best_report)
    }
}

fn beats(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOLERANCE * incumbent.abs().max(f64::MIN_POSITIVE)
}

fn ties(candidate: f64, incumbent: f64) -> bool {
    !beats(candidate, incumbent) && !beats(incumbent, candidate)
}

/// Golden-section maximization of `f` on `[lo, hi]` until the bracket is
/// narrower than `resolution`. Returns the best evaluated point.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, resolution: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > resolution {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d)?;
        }
    }
    Ok(if beats(fd, fc) { (d, fd) } else { (c, fc) })
}

struct Maximum {
    x: f64,
    value: f64,
    coarse: Vec<(f64, f64)>,
    ties: usize,
}

/// Coarse scan of `(lo, hi]` then golden refinement around the best point.
fn maximize_rotation<F>(mut f: F, lo: f64, hi: f64, coarse_step: f64, resolution: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut coarse = Vec::new();
    let mut k = 1;
    loop {
        let x = lo + coarse_step * k as f64;
        if x > hi + 1e-9 * coarse_step {
            break;
        }
        let x = x.min(hi);
        coarse.push((x, f(x)?));
        k += 1;
    }
    if coarse.is_empty() {
        coarse.push((hi, f(hi)?));
    }
    let mut best = 0;
    let mut tie_count = 0;
    for (i, &(_, v)) in coarse.iter().enumerate().skip(1) {
        if beats(v, coarse[best].1) {
            best = i;
        } else if ties(v, coarse[best].1) {
            tie_count += 1;
        }
    }
    let (x0, v0) = coarse[best];
    // Refinement bracket stays inside the open-closed search range.
    let floor = lo + 1e-3 * coarse_step;
    let a = (x0 - coarse_step).max(floor);
    let b = (x0 + coarse_step).min(hi);
    let (mut x, mut value) = (x0, v0);
    if b - a > resolution {
        let (xr, vr) = golden_section_max(&mut f, a, b, 0.5 * resolution)?;
        if beats(vr, v0) {
            x = xr;
            value = vr;
        }
    }
    Ok(Maximum {
        x,
        value,
        coarse,
        ties: tie_count,
    })
}

/// Best rotation for an already built trajectory, with the monetary inputs
/// allowed to depend on the rotation length.
fn optimize_on_trajectory<E>(
    trajectory: &VolumeTrajectory,
    econ_for: E,
    objective: Objective,
    lo: f64,
    hi: f64,
    coarse_step: f64,
    resolution: f64,
) -> Result<(Maximum, RotationReport)>
where
    E: Fn(f64) -> Result<EconParams>,
{
    let eval = |tau: f64| -> Result<RotationReport> { report_at(trajectory, &econ_for(tau)?, tau) };
    let max = maximize_rotation(|tau| Ok(objective.of(&eval(tau)?)), lo, hi, coarse_step, resolution)?;
    let report = eval(max.x)?;
    Ok((max, report))
}

fn rotation_result(
    objective: Objective,
    max: Maximum,
    report: RotationReport,
) -> Result<OptimizationResult> {
    let profitable = max.value >= 0.0;
    Ok(OptimizationResult {
        objective,
        best_plan: ManagementPlan::unthinned(max.x)?,
        best_report: report,
        search_trace: max
            .coarse
            .into_iter()
            .map(|(rotation, objective)| TraceEntry {
                rotation,
                thinnings: Vec::new(),
                objective,
            })
            .collect(),
        profitable,
        ties: max.ties,
    })
}

/// Unthinned rotation maximizing `objective` over `(0, tau_max]`.
pub fn optimize_rotation(
    params: &YieldParams,
    econ: &EconParams,
    objective: Objective,
    search: &RotationSearch,
) -> Result<OptimizationResult> {
    search.validate()?;
    econ.validate()?;
    let plan = ManagementPlan::unthinned(search.tau_max)?;
    let trajectory = VolumeTrajectory::build(params, &plan, search.step)?;
    let (max, report) = optimize_on_trajectory(
        &trajectory,
        |_| Ok(*econ),
        objective,
        0.0,
        search.tau_max,
        search.coarse_step,
        search.resolution,
    )?;
    rotation_result(objective, max, report)
}

/// Rotation optimum when all monetary inputs evolve with `process` and each
/// candidate rotation is observed over the window `[b_star, b_star + τ]`.
pub fn optimize_rotation_in_window(
    params: &YieldParams,
    econ: &EconParams,
    process: &PriceProcess,
    b_star: f64,
    objective: Objective,
    search: &RotationSearch,
) -> Result<OptimizationResult> {
    search.validate()?;
    econ.validate()?;
    let plan = ManagementPlan::unthinned(search.tau_max)?;
    let trajectory = VolumeTrajectory::build(params, &plan, search.step)?;
    let (max, report) = optimize_on_trajectory(
        &trajectory,
        |tau| Ok(econ.scaled(process.window_multiplier(b_star, tau)?)),
        objective,
        0.0,
        search.tau_max,
        search.coarse_step,
        search.resolution,
    )?;
    rotation_result(objective, max, report)
}

/// Candidate grid of the thinning search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinningSearch {
    /// Thinning ages are `1, 2, …, max_thinning_age` years.
    pub max_thinning_age: u32,
    /// Removed fractions of standing volume.
    pub intensities: Vec<f64>,
    /// Longest rotation considered for any schedule.
    pub rotation_max: f64,
    pub step: f64,
    pub resolution: f64,
    /// Number of best coarse schedules refined by golden section.
    pub refine_top: usize,
    pub objective: Objective,
}

impl Default for ThinningSearch {
    fn default() -> Self {
        Self {
            max_thinning_age: 60,
            intensities: vec![0.1, 0.2, 0.3, 0.4],
            rotation_max: 100.0,
            step: THINNING_SEARCH_STEP,
            resolution: REFINE_RESOLUTION,
            refine_top: 5,
            objective: Objective::ReturnRate,
        }
    }
}

impl ThinningSearch {
    fn validate(&self) -> Result<()> {
        require(self.max_thinning_age >= 1, "max_thinning_age", "must be at least 1")?;
        require(
            !self.intensities.is_empty()
                && self.intensities.iter().all(|&q| q > 0.0 && q < 1.0),
            "intensities",
            "must be a nonempty list of fractions in (0, 1)",
        )?;
        require(
            self.rotation_max.is_finite() && self.rotation_max > 1.0,
            "rotation_max",
            format!("must exceed one year, got {}", self.rotation_max),
        )?;
        require(self.step > 0.0, "step", "must be positive")?;
        require(self.resolution > 0.0, "resolution", "must be positive")?;
        require(self.refine_top >= 1, "refine_top", "must be at least 1")
    }

    fn rotation_search(&self) -> RotationSearch {
        RotationSearch {
            tau_max: self.rotation_max,
            coarse_step: 1.0,
            resolution: self.resolution,
            step: self.step,
        }
    }

    /// Every `(age, fraction)` schedule with `1..=max_events` thinnings at
    /// strictly increasing ages, in a fixed order.
    fn schedules(&self, max_events: usize) -> Vec<Vec<(f64, f64)>> {
        let ages: Vec<f64> = (1..=self.max_thinning_age)
            .map(f64::from)
            .filter(|&a| a < self.rotation_max)
            .collect();
        let mut out = Vec::new();
        let mut stack: Vec<(f64, f64)> = Vec::new();
        fn extend(
            ages: &[f64],
            intensities: &[f64],
            depth: usize,
            stack: &mut Vec<(f64, f64)>,
            out: &mut Vec<Vec<(f64, f64)>>,
        ) {
            if depth == 0 {
                return;
            }
            let after = stack.last().map_or(0.0, |&(a, _)| a);
            for &age in ages.iter().filter(|&&a| a > after) {
                for &q in intensities {
                    stack.push((age, q));
                    out.push(stack.clone());
                    extend(ages, intensities, depth - 1, stack, out);
                    stack.pop();
                }
            }
        }
        extend(&ages, &self.intensities, max_events, &mut stack, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinningOutcome {
    /// Best schedule with at least one thinning.
    pub best: OptimizationResult,
    /// Thinning-free optimum on the same rotation range.
    pub baseline: OptimizationResult,
    /// The best schedule strictly beats the thinning-free optimum.
    pub feasible: bool,
    pub evaluated: usize,
    /// Candidates that could not be built (e.g. nothing left to thin).
    pub skipped: usize,
}

/// Exhaustive thinning search with `max_events ∈ {1, 2}` thinnings per
/// schedule, each schedule's rotation optimized on `(last thinning, rotation_max]`.
pub fn optimize_thinnings(
    params: &YieldParams,
    econ: &EconParams,
    response: ThinningResponse,
    max_events: usize,
    search: &ThinningSearch,
) -> Result<ThinningOutcome> {
    search.validate()?;
    response.validate()?;
    econ.validate()?;
    if !(1..=2).contains(&max_events) {
        return Err(Error::InvalidParameter {
            name: "max_events",
            reason: format!("must be 1 or 2, got {max_events}"),
        });
    }
    let objective = search.objective;
    let baseline = optimize_rotation(params, econ, objective, &search.rotation_search())?;

    struct Candidate {
        plan: ManagementPlan,
        rotation: f64,
        value: f64,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut skipped = 0;
    for schedule in search.schedules(max_events) {
        let built = ManagementPlan::from_fractions(params, search.rotation_max, response, &schedule)
            .and_then(|plan| {
                let trajectory = VolumeTrajectory::build(params, &plan, search.step)?;
                Ok((plan, trajectory))
            });
        let Ok((plan, trajectory)) = built else {
            skipped += 1;
            continue;
        };
        let last = schedule.last().map_or(0.0, |&(a, _)| a);
        // Coarse scan over whole years after the last thinning.
        let mut best: Option<(f64, f64)> = None;
        let mut tau = last + 1.0;
        while tau <= search.rotation_max + 1e-9 {
            let v = objective.of(&report_at(&trajectory, econ, tau)?);
            if best.is_none_or(|(_, b)| beats(v, b)) {
                best = Some((tau, v));
            }
            tau += 1.0;
        }
        match best {
            Some((rotation, value)) => candidates.push(Candidate {
                plan,
                rotation,
                value,
            }),
            None => skipped += 1,
        }
    }
    let evaluated = candidates.len();
    if evaluated == 0 {
        return Err(Error::Domain("no feasible thinning schedule on the search grid".into()));
    }

    // Order by coarse value, stable on enumeration order, and refine the top.
    let mut order: Vec<usize> = (0..evaluated).collect();
    order.sort_by(|&i, &j| candidates[j].value.total_cmp(&candidates[i].value));
    let mut winner: Option<(usize, f64, f64)> = None;
    for &i in order.iter().take(search.refine_top) {
        let c = &candidates[i];
        let last = c.plan.thinnings.last().map_or(0.0, |e| e.age);
        let trajectory = VolumeTrajectory::build(params, &c.plan, search.step)?;
        let eval = |tau: f64| Ok(objective.of(&report_at(&trajectory, econ, tau)?));
        let a = (c.rotation - 1.0).max(last + 1e-3);
        let b = (c.rotation + 1.0).min(search.rotation_max);
        let (mut x, mut v) = (c.rotation, c.value);
        if b - a > search.resolution {
            let (xr, vr) = golden_section_max(eval, a, b, 0.5 * search.resolution)?;
            if beats(vr, v) {
                x = xr;
                v = vr;
            }
        }
        if winner.is_none_or(|(_, _, wv)| beats(v, wv)) {
            winner = Some((i, x, v));
        }
    }
    let (index, rotation, _) = winner.expect("at least one candidate refined");
    let chosen = &candidates[index];
    let best_plan = ManagementPlan::new(rotation, chosen.plan.thinnings.clone(), response)?;
    let trajectory = VolumeTrajectory::build(params, &chosen.plan, search.step)?;
    let best_report = report_at(&trajectory, econ, rotation)?;
    let best_value = objective.of(&best_report);
    let search_trace = candidates
        .iter()
        .map(|c| TraceEntry {
            rotation: c.rotation,
            thinnings: c.plan.thinnings.clone(),
            objective: c.value,
        })
        .collect();
    let feasible = beats(best_value, baseline.best_objective());
    Ok(ThinningOutcome {
        best: OptimizationResult {
            objective,
            best_plan,
            best_report,
            search_trace,
            profitable: best_value >= 0.0,
            ties: 0,
        },
        baseline,
        feasible,
        evaluated,
        skipped,
    })
}

/// Smallest constant-response `δ` in `[0, upper]` at which some thinning
/// schedule beats the thinning-free optimum, located by bisection to
/// `tolerance`. `None` when thinning is not feasible even at `upper`.
pub fn feasibility_threshold(
    params: &YieldParams,
    econ: &EconParams,
    search: &ThinningSearch,
    max_events: usize,
    upper: f64,
    tolerance: f64,
) -> Result<Option<f64>> {
    let feasible = |delta: f64| -> Result<bool> {
        Ok(optimize_thinnings(params, econ, ThinningResponse::Constant { delta }, max_events, search)?
            .feasible)
    };
    if !feasible(upper)? {
        return Ok(None);
    }
    if feasible(0.0)? {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Inputs of the stylized return model: net log price, a constant volume
/// growth rate, and the accumulated expenses of a rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StylizedParams {
    /// $/MBF.
    pub price: f64,
    /// MBF/acre/year.
    pub growth_rate: f64,
    /// $/acre.
    pub expenses: f64,
}

impl StylizedParams {
    pub fn new(price: f64, growth_rate: f64, expenses: f64) -> Result<Self> {
        let sp = Self {
            price,
            growth_rate,
            expenses,
        };
        sp.validate()?;
        Ok(sp)
    }

    /// Expenses may be zero (the degenerate expense-free case); price and
    /// growth rate must be positive.
    pub fn validate(&self) -> Result<()> {
        require(self.price.is_finite() && self.price > 0.0, "price", "must be positive")?;
        require(
            self.growth_rate.is_finite() && self.growth_rate > 0.0,
            "growth_rate",
            "must be positive",
        )?;
        require(
            self.expenses.is_finite() && self.expenses >= 0.0,
            "expenses",
            "must be nonnegative",
        )
    }
}

/// `(f·v·τ − g) / [(τ/2)·(f·v·τ + g)]`: accumulated operating profit over a
/// linearized average capitalization.
pub fn stylized_return(sp: &StylizedParams, tau: f64) -> Result<f64> {
    sp.validate()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("rotation must be positive, got {tau}")));
    }
    let revenue = sp.price * sp.growth_rate * tau;
    Ok((revenue - sp.expenses) / (0.5 * tau * (revenue + sp.expenses)))
}

/// Root of the derivative of [`stylized_return`]: `g / [f·v·(√2 − 1)]`.
pub fn stylized_optimal_rotation(sp: &StylizedParams) -> Result<f64> {
    sp.validate()?;
    Ok(sp.expenses / (sp.price * sp.growth_rate * (std::f64::consts::SQRT_2 - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub price_multiplier: f64,
    pub expense_multiplier: f64,
    pub optimal_rotation: f64,
    pub optimal_return_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    pub price_multipliers: Vec<f64>,
    pub expense_multipliers: Vec<f64>,
    /// Price-major: row `i·len(expense) + j` holds price `i`, expense `j`.
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityTable {
    pub fn cell(&self, price_index: usize, expense_index: usize) -> &SensitivityRow {
        &self.rows[price_index * self.expense_multipliers.len() + expense_index]
    }

    /// Optimal rotation nonincreasing in the price multiplier and
    /// nondecreasing in the expense multiplier, up to `slack` years.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let sorted = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            idx
        };
        let prices = sorted(&self.price_multipliers);
        let expenses = sorted(&self.expense_multipliers);
        let tau = |i: usize, j: usize| self.cell(i, j).optimal_rotation;
        let along_price = expenses.iter().all(|&j| {
            prices
                .windows(2)
                .all(|w| tau(w[1], j) <= tau(w[0], j) + slack)
        });
        let along_expense = prices.iter().all(|&i| {
            expenses
                .windows(2)
                .all(|w| tau(i, w[1]) + slack >= tau(i, w[0]))
        });
        along_price && along_expense
    }
}

/// Re-optimizes the unthinned rotation (return-rate objective) for every
/// pair of price and expense multipliers.
pub fn sensitivity_sweep(
    params: &YieldParams,
    econ: &EconParams,
    price_multipliers: &[f64],
    expense_multipliers: &[f64],
    search: &RotationSearch,
) -> Result<SensitivityTable> {
    search.validate()?;
    econ.validate()?;
    require(
        price_multipliers.iter().chain(expense_multipliers).all(|&m| m.is_finite() && m > 0.0),
        "multipliers",
        "must all be positive",
    )?;
    let plan = ManagementPlan::unthinned(search.tau_max)?;
    let trajectory = VolumeTrajectory::build(params, &plan, search.step)?;
    let mut rows = Vec::with_capacity(price_multipliers.len() * expense_multipliers.len());
    for &pm in price_multipliers {
        for &em in expense_multipliers {
            let scaled = econ.scaled_split(pm, em);
            let (max, report) = optimize_on_trajectory(
                &trajectory,
                |_| Ok(scaled),
                Objective::ReturnRate,
                0.0,
                search.tau_max,
                search.coarse_step,
                search.resolution,
            )?;
            rows.push(SensitivityRow {
                price_multiplier: pm,
                expense_multiplier: em,
                optimal_rotation: max.x,
                optimal_return_rate: report.expected_return_rate,
            });
        }
    }
    Ok(SensitivityTable {
        price_multipliers: price_multipliers.to_vec(),
        expense_multipliers: expense_multipliers.to_vec(),
        rows,
    })
}
