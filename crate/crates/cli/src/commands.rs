//! One function per command. Each writes its files into the output
//! directory and returns the lines to print.
//!
//! Files written, by command (`<name>-summary.json` always):
//!
//! | command              | series                                                          |
//! |----------------------|-----------------------------------------------------------------|
//! | `evaluate`           | `evaluate-trajectory.csv`: age, volume, capitalization          |
//! | `optimize-rotation`  | `optimize-rotation-trace.csv`: rotation, objective              |
//! | `optimize-thinnings` | `optimize-thinnings-curves.csv`: rotation, objective_unthinned, objective_thinned; `optimize-thinnings-trace.csv` |
//! | `break-even`         | none                                                            |
//! | `price-invariance`   | `price-invariance.csv`: offset, prefactor, rates, ratios, optimal_rotation |
//! | `sensitivity`        | `sensitivity.csv`: price_multiplier, expense_multiplier, optimal_rotation, optimal_return_rate |
//! | `curves`             | `curves.csv`: rotation, profit_rate, capitalization, return_rate |

use std::path::PathBuf;

use rotation_core::accounting::{break_even_rotation, expected_rates, report_at, RotationReport};
use rotation_core::optimizer::{
    optimize_rotation, optimize_rotation_in_window, optimize_thinnings, sensitivity_sweep,
    Objective, OptimizationResult, RotationSearch, ThinningSearch, REFINE_RESOLUTION,
};
use rotation_core::prices::verify_return_rate_invariance;
use rotation_core::{ManagementPlan, ThinningResponse, VolumeTrajectory};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{format_number, prepare_dir, write_csv, write_json};
use crate::scenario::Scenario;
use crate::{Cli, Command};

/// Multipliers of the sensitivity table when the scenario has no `[sweep]`.
pub const DEFAULT_MULTIPLIERS: [f64; 3] = [0.5, 1.0, 2.0];

/// Window starts of the price-invariance table, relative to the process
/// origin, when `--offsets` is not given.
pub const DEFAULT_OFFSETS: [f64; 5] = [0.0, 5.0, 10.0, 20.0, 40.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub out: PathBuf,
    pub tau_max: Option<f64>,
    pub step: Option<f64>,
    pub grid_step: f64,
    pub objective: Objective,
    pub response: Option<ThinningResponse>,
    pub max_events: usize,
    pub rotation: Option<f64>,
    pub offsets: Option<Vec<f64>>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            out: PathBuf::from("."),
            tau_max: None,
            step: None,
            grid_step: 0.5,
            objective: Objective::ReturnRate,
            response: None,
            max_events: 2,
            rotation: None,
            offsets: None,
        }
    }
}

fn positive(name: &str, value: Option<f64>) -> Result<(), CliError> {
    match value {
        Some(v) if !(v.is_finite() && v > 0.0) => {
            Err(CliError::Usage(format!("--{name} must be a positive number, got {v}")))
        }
        _ => Ok(()),
    }
}

impl Options {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        positive("tau-max", cli.tau_max)?;
        positive("step", cli.step)?;
        positive("grid-step", Some(cli.grid_step))?;
        positive("rotation", cli.rotation)?;
        let response = match (cli.delta, cli.decay) {
            (Some(delta), _) => Some(ThinningResponse::Constant { delta }),
            (_, Some(decay)) => Some(ThinningResponse::Decaying { decay }),
            _ => None,
        };
        if let Some(r) = response {
            r.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if !(1..=2).contains(&cli.max_events) {
            return Err(CliError::Usage(format!(
                "--max-events must be 1 or 2, got {}",
                cli.max_events
            )));
        }
        if let Some(offsets) = &cli.offsets {
            if offsets.iter().any(|o| !o.is_finite()) {
                return Err(CliError::Usage("--offsets must be finite numbers".into()));
            }
        }
        Ok(Self {
            out: cli.out.clone(),
            tau_max: cli.tau_max,
            step: cli.step,
            grid_step: cli.grid_step,
            objective: cli.objective.into(),
            response,
            max_events: cli.max_events,
            rotation: cli.rotation,
            offsets: cli.offsets.clone(),
        })
    }

    fn rotation_search(&self) -> RotationSearch {
        let defaults = RotationSearch::default();
        RotationSearch {
            tau_max: self.tau_max.unwrap_or(defaults.tau_max),
            step: self.step.unwrap_or(defaults.step),
            ..defaults
        }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

/// Rotation grid `grid_step, 2·grid_step, …` up to `tau_max`.
pub fn rotation_grid(grid_step: f64, tau_max: f64) -> Vec<f64> {
    let n = (tau_max / grid_step + 1e-9).floor() as usize;
    (1..=n).map(|k| k as f64 * grid_step).collect()
}

pub fn run(command: Command, scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    prepare_dir(&options.out)?;
    match command {
        Command::Evaluate => evaluate(scenario, options),
        Command::OptimizeRotation => rotation(scenario, options),
        Command::OptimizeThinnings => thinnings(scenario, options),
        Command::BreakEven => break_even(scenario, options),
        Command::PriceInvariance => price_invariance(scenario, options),
        Command::Sensitivity => sensitivity(scenario, options),
        Command::Curves => curves(scenario, options),
    }
}

fn report_lines(report: &RotationReport) -> Vec<String> {
    vec![
        format!("rotation                 {} years", format_number(report.rotation)),
        format!("expected profit rate     {} $/acre/year", format_number(report.expected_profit_rate)),
        format!("expected capitalization  {} $/acre", format_number(report.expected_capitalization)),
        format!("expected return rate     {} 1/year", format_number(report.expected_return_rate)),
        format!("break-even               {}", report.break_even),
    ]
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'static str,
    scenario: &'a str,
    #[serde(flatten)]
    body: T,
}

fn summary<T: Serialize>(command: Command, scenario: &Scenario, options: &Options, body: T) -> Result<PathBuf, CliError> {
    let path = options.path(&format!("{}-summary.json", command.name()));
    write_json(
        &path,
        &Summary {
            command: command.name(),
            scenario: &scenario.meta.name,
            body,
        },
    )
}

fn plan_for_evaluation(scenario: &Scenario, options: &Options) -> Result<ManagementPlan, CliError> {
    let base = scenario.plan.clone();
    let response = options
        .response
        .or_else(|| base.as_ref().map(|p| p.response))
        .unwrap_or_default();
    let plan = match (options.rotation, base) {
        (Some(rotation), Some(p)) => ManagementPlan::new(rotation, p.thinnings, response),
        (Some(rotation), None) => ManagementPlan::new(rotation, Vec::new(), response),
        (None, Some(p)) => ManagementPlan::new(p.rotation, p.thinnings, response),
        (None, None) => {
            return Err(CliError::Usage(
                "evaluate needs a [plan] section in the scenario or --rotation".into(),
            ))
        }
    };
    plan.map_err(|e| CliError::Validation(format!("[plan] {e}")))
}

fn evaluate(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let plan = plan_for_evaluation(scenario, options)?;
    let step = options.step.unwrap_or(rotation_core::DEFAULT_STEP);
    let trajectory = VolumeTrajectory::build(&scenario.yield_params, &plan, step)?;
    let report = expected_rates(&trajectory, &scenario.econ)?;
    let econ = &scenario.econ;
    let rows: Vec<Vec<f64>> = trajectory
        .samples()
        .iter()
        .map(|&(age, v)| vec![age, v, econ.bare_land_value + econ.stumpage_price * v])
        .collect();
    let mut files = vec![write_csv(
        &options.path("evaluate-trajectory.csv"),
        &["age", "volume", "capitalization"],
        &rows,
    )?];
    #[derive(Serialize)]
    struct Body<'a> {
        plan: &'a ManagementPlan,
        report: &'a RotationReport,
        thinnings: &'a [rotation_core::growth::EventRecord],
    }
    files.push(summary(
        Command::Evaluate,
        scenario,
        options,
        Body {
            plan: &plan,
            report: &report,
            thinnings: trajectory.events(),
        },
    )?);
    Ok(Outcome {
        files,
        lines: report_lines(&report),
    })
}

fn optimum_lines(label: &str, result: &OptimizationResult) -> Vec<String> {
    let mut lines = vec![format!(
        "{label}: rotation {} years, objective {}",
        format_number(result.best_plan.rotation),
        format_number(result.best_objective())
    )];
    if !result.profitable {
        lines.push("warning: no rotation in the search range is profitable".into());
    }
    lines
}

fn rotation(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let search = options.rotation_search();
    let result = optimize_rotation(&scenario.yield_params, &scenario.econ, options.objective, &search)?;
    let rows: Vec<Vec<f64>> = result
        .search_trace
        .iter()
        .map(|t| vec![t.rotation, t.objective])
        .collect();
    let mut files = vec![write_csv(
        &options.path("optimize-rotation-trace.csv"),
        &["rotation", "objective"],
        &rows,
    )?];
    #[derive(Serialize)]
    struct Body<'a> {
        objective: Objective,
        search: RotationSearch,
        best_plan: &'a ManagementPlan,
        best_report: &'a RotationReport,
        profitable: bool,
        ties: usize,
    }
    files.push(summary(
        Command::OptimizeRotation,
        scenario,
        options,
        Body {
            objective: result.objective,
            search,
            best_plan: &result.best_plan,
            best_report: &result.best_report,
            profitable: result.profitable,
            ties: result.ties,
        },
    )?);
    let mut lines = optimum_lines("optimum", &result);
    lines.extend(report_lines(&result.best_report));
    Ok(Outcome { files, lines })
}

fn thinnings(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let response = options
        .response
        .or_else(|| scenario.plan.as_ref().map(|p| p.response))
        .ok_or_else(|| {
            CliError::Usage(
                "optimize-thinnings needs --delta, --decay or a [plan] response in the scenario".into(),
            )
        })?;
    let defaults = ThinningSearch::default();
    let search = ThinningSearch {
        rotation_max: options.tau_max.unwrap_or(defaults.rotation_max),
        step: options.step.unwrap_or(defaults.step),
        objective: options.objective,
        ..defaults
    };
    let params = &scenario.yield_params;
    let econ = &scenario.econ;
    let outcome = optimize_thinnings(params, econ, response, options.max_events, &search)?;

    // With/without-thinning curves over the rotation grid. Thinnings at or
    // after a grid rotation are dropped for that rotation.
    let extended = ManagementPlan::new(search.rotation_max, outcome.best.best_plan.thinnings.clone(), response)
        .map_err(CliError::Computation)?;
    let thinned = VolumeTrajectory::build(params, &extended, search.step)?;
    let bare = VolumeTrajectory::build(params, &ManagementPlan::unthinned(search.rotation_max)?, search.step)?;
    let mut rows = Vec::new();
    for tau in rotation_grid(options.grid_step, search.rotation_max) {
        rows.push(vec![
            tau,
            search.objective.of(&report_at(&bare, econ, tau)?),
            search.objective.of(&report_at(&thinned, econ, tau)?),
        ]);
    }
    let mut files = vec![write_csv(
        &options.path("optimize-thinnings-curves.csv"),
        &["rotation", "objective_unthinned", "objective_thinned"],
        &rows,
    )?];
    let trace: Vec<Vec<f64>> = outcome
        .best
        .search_trace
        .iter()
        .map(|t| {
            let mut row = vec![t.rotation];
            for k in 0..options.max_events {
                let e = t.thinnings.get(k);
                row.push(e.map_or(f64::NAN, |e| e.age));
                row.push(e.map_or(f64::NAN, |e| e.removed));
            }
            row.push(t.objective);
            row
        })
        .collect();
    let mut header = vec!["rotation".to_owned()];
    for k in 1..=options.max_events {
        header.push(format!("thinning{k}_age"));
        header.push(format!("thinning{k}_removed"));
    }
    header.push("objective".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    files.push(write_csv(&options.path("optimize-thinnings-trace.csv"), &header, &trace)?);

    #[derive(Serialize)]
    struct Body<'a> {
        response: ThinningResponse,
        max_events: usize,
        search: &'a ThinningSearch,
        feasible: bool,
        best_plan: &'a ManagementPlan,
        best_report: &'a RotationReport,
        baseline_plan: &'a ManagementPlan,
        baseline_report: &'a RotationReport,
        evaluated: usize,
        skipped: usize,
    }
    files.push(summary(
        Command::OptimizeThinnings,
        scenario,
        options,
        Body {
            response,
            max_events: options.max_events,
            search: &search,
            feasible: outcome.feasible,
            best_plan: &outcome.best.best_plan,
            best_report: &outcome.best.best_report,
            baseline_plan: &outcome.baseline.best_plan,
            baseline_report: &outcome.baseline.best_report,
            evaluated: outcome.evaluated,
            skipped: outcome.skipped,
        },
    )?);
    let mut lines = optimum_lines("without thinning", &outcome.baseline);
    lines.extend(optimum_lines("best thinned schedule", &outcome.best));
    for e in &outcome.best.best_plan.thinnings {
        lines.push(format!(
            "  thinning at {} years removing {} MBF/acre",
            format_number(e.age),
            format_number(e.removed)
        ));
    }
    lines.push(format!(
        "thinning {} ({} schedules evaluated, {} skipped)",
        if outcome.feasible { "is feasible" } else { "is not feasible" },
        outcome.evaluated,
        outcome.skipped
    ));
    Ok(Outcome { files, lines })
}

fn break_even(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let tau = break_even_rotation(&scenario.yield_params, &scenario.econ)?;
    #[derive(Serialize)]
    struct Body {
        break_even_rotation: f64,
    }
    let files = vec![summary(
        Command::BreakEven,
        scenario,
        options,
        Body {
            break_even_rotation: tau,
        },
    )?];
    Ok(Outcome {
        files,
        lines: vec![format!("break-even rotation {} years", format_number(tau))],
    })
}

fn price_invariance(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let process = scenario.price_process.ok_or_else(|| {
        CliError::Validation("price-invariance needs a [price_process] section".into())
    })?;
    let search = options.rotation_search();
    let params = &scenario.yield_params;
    let econ = &scenario.econ;
    let rotation = match options.rotation.or_else(|| scenario.plan.as_ref().map(|p| p.rotation)) {
        Some(r) => r,
        None => optimize_rotation(params, econ, Objective::ReturnRate, &search)?
            .best_plan
            .rotation,
    };
    let plan = match &scenario.plan {
        Some(p) if options.rotation.is_none() => p.clone(),
        _ => ManagementPlan::unthinned(rotation)?,
    };
    let trajectory = VolumeTrajectory::build(params, &plan, search.step)?;
    let offsets: Vec<f64> = options
        .offsets
        .clone()
        .unwrap_or_else(|| DEFAULT_OFFSETS.iter().map(|o| process.t0 + o).collect());
    let reference = process.t0;
    let report = verify_return_rate_invariance(&trajectory, econ, &process, reference, &offsets)?;

    let stationary_opt = optimize_rotation(params, econ, Objective::ReturnRate, &search)?;
    let mut optima = Vec::with_capacity(offsets.len());
    for &b in &offsets {
        let r = optimize_rotation_in_window(params, econ, &process, b, Objective::ReturnRate, &search)?;
        optima.push(r.best_plan.rotation);
    }
    let spread = optima
        .iter()
        .map(|t| (t - stationary_opt.best_plan.rotation).abs())
        .fold(0.0, f64::max);
    let argmax_invariant = spread <= REFINE_RESOLUTION;

    let rows: Vec<Vec<f64>> = report
        .rows
        .iter()
        .zip(&optima)
        .map(|(r, &opt)| {
            vec![
                r.offset,
                r.prefactor,
                r.expected_profit_rate,
                r.expected_capitalization,
                r.expected_return_rate,
                r.profit_ratio,
                r.capitalization_ratio,
                opt,
            ]
        })
        .collect();
    let mut files = vec![write_csv(
        &options.path("price-invariance.csv"),
        &[
            "offset",
            "prefactor",
            "expected_profit_rate",
            "expected_capitalization",
            "expected_return_rate",
            "profit_ratio",
            "capitalization_ratio",
            "optimal_rotation",
        ],
        &rows,
    )?];
    #[derive(Serialize)]
    struct Body<'a> {
        rotation: f64,
        process: rotation_core::PriceProcess,
        reference_start: f64,
        stationary: &'a RotationReport,
        max_scaling_deviation: f64,
        max_return_deviation: f64,
        invariance_holds: bool,
        stationary_optimal_rotation: f64,
        max_optimal_rotation_shift: f64,
        optimal_rotation_invariant: bool,
    }
    files.push(summary(
        Command::PriceInvariance,
        scenario,
        options,
        Body {
            rotation: plan.rotation,
            process,
            reference_start: reference,
            stationary: &report.stationary,
            max_scaling_deviation: report.max_scaling_deviation,
            max_return_deviation: report.max_return_deviation,
            invariance_holds: report.holds,
            stationary_optimal_rotation: stationary_opt.best_plan.rotation,
            max_optimal_rotation_shift: spread,
            optimal_rotation_invariant: argmax_invariant,
        },
    )?);
    let lines = vec![
        format!("rotation {} years, {} windows", format_number(plan.rotation), offsets.len()),
        format!(
            "largest deviation of a scaling ratio from its prefactor: {}",
            format_number(report.max_scaling_deviation)
        ),
        format!(
            "largest deviation of the return rate from the stationary one: {}",
            format_number(report.max_return_deviation)
        ),
        format!("return rate invariant: {}", report.holds),
        format!(
            "optimal rotation invariant: {} (largest shift {} years)",
            argmax_invariant,
            format_number(spread)
        ),
    ];
    Ok(Outcome { files, lines })
}

fn sensitivity(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let (prices, expenses) = match &scenario.sweep {
        Some(s) => (s.price_multipliers.clone(), s.expense_multipliers.clone()),
        None => (DEFAULT_MULTIPLIERS.to_vec(), DEFAULT_MULTIPLIERS.to_vec()),
    };
    let search = options.rotation_search();
    let table = sensitivity_sweep(&scenario.yield_params, &scenario.econ, &prices, &expenses, &search)?;
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| vec![r.price_multiplier, r.expense_multiplier, r.optimal_rotation, r.optimal_return_rate])
        .collect();
    let monotone = table.is_monotone(0.0);
    let mut files = vec![write_csv(
        &options.path("sensitivity.csv"),
        &["price_multiplier", "expense_multiplier", "optimal_rotation", "optimal_return_rate"],
        &rows,
    )?];
    #[derive(Serialize)]
    struct Body<'a> {
        table: &'a rotation_core::optimizer::SensitivityTable,
        monotone: bool,
    }
    files.push(summary(
        Command::Sensitivity,
        scenario,
        options,
        Body {
            table: &table,
            monotone,
        },
    )?);
    let mut lines: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "price x{} expenses x{}: rotation {} years, return rate {}",
                format_number(r.price_multiplier),
                format_number(r.expense_multiplier),
                format_number(r.optimal_rotation),
                format_number(r.optimal_return_rate)
            )
        })
        .collect();
    lines.push(format!("monotone: {monotone}"));
    Ok(Outcome { files, lines })
}

fn curves(scenario: &Scenario, options: &Options) -> Result<Outcome, CliError> {
    let search = options.rotation_search();
    let trajectory = VolumeTrajectory::build(
        &scenario.yield_params,
        &ManagementPlan::unthinned(search.tau_max)?,
        search.step,
    )?;
    let mut rows = Vec::new();
    for tau in rotation_grid(options.grid_step, search.tau_max) {
        let r = report_at(&trajectory, &scenario.econ, tau)?;
        rows.push(vec![tau, r.expected_profit_rate, r.expected_capitalization, r.expected_return_rate]);
    }
    let peak = |column: usize| {
        rows.iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |best, row| {
                if row[column] > best.1 {
                    (row[0], row[column])
                } else {
                    best
                }
            })
            .0
    };
    let (profit_peak, return_peak) = (peak(1), peak(3));
    let mut files = vec![write_csv(
        &options.path("curves.csv"),
        &["rotation", "profit_rate", "capitalization", "return_rate"],
        &rows,
    )?];
    #[derive(Serialize)]
    struct Body {
        rows: usize,
        grid_step: f64,
        tau_max: f64,
        profit_rate_peak: f64,
        return_rate_peak: f64,
    }
    files.push(summary(
        Command::Curves,
        scenario,
        options,
        Body {
            rows: rows.len(),
            grid_step: options.grid_step,
            tau_max: search.tau_max,
            profit_rate_peak: profit_peak,
            return_rate_peak: return_peak,
        },
    )?);
    Ok(Outcome {
        files,
        lines: vec![
            format!("{} rotations written", rows.len()),
            format!("profit rate peaks at {} years", format_number(profit_peak)),
            format!("return rate peaks at {} years", format_number(return_peak)),
        ],
    })
}
