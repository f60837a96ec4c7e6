//! Command-line front end: reads a scenario file, runs one analysis and
//! writes CSV series plus a JSON summary.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rotation_core::optimizer::Objective;

pub use commands::{run, Options, Outcome};
pub use error::CliError;
pub use scenario::{emit_scenario, load_scenario, parse_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Expected rates of the scenario's plan.
    Evaluate,
    /// Rotation maximizing the chosen objective, with the search trace.
    OptimizeRotation,
    /// Exhaustive thinning search against the thinning-free optimum.
    OptimizeThinnings,
    /// Shortest rotation that recovers its expenses.
    BreakEven,
    /// Return-rate invariance under an evolving price level.
    PriceInvariance,
    /// Optimal rotation over a grid of price and expense multipliers.
    Sensitivity,
    /// Profit rate, capitalization and return rate against rotation age.
    Curves,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evaluate => "evaluate",
            Command::OptimizeRotation => "optimize-rotation",
            Command::OptimizeThinnings => "optimize-thinnings",
            Command::BreakEven => "break-even",
            Command::PriceInvariance => "price-invariance",
            Command::Sensitivity => "sensitivity",
            Command::Curves => "curves",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    ReturnRate,
    ProfitRate,
}

impl From<ObjectiveArg> for Objective {
    fn from(value: ObjectiveArg) -> Self {
        match value {
            ObjectiveArg::ReturnRate => Objective::ReturnRate,
            ObjectiveArg::ProfitRate => Objective::ProfitRate,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rotation", version, about = "Rotation age and thinning analysis on accrual accounting")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,

    /// Directory for output files.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Longest rotation considered, in years.
    #[arg(long, value_name = "YEARS")]
    pub tau_max: Option<f64>,

    /// Sampling step of volume trajectories, in years.
    #[arg(long, value_name = "YEARS")]
    pub step: Option<f64>,

    /// Spacing of the rotation grid in emitted series, in years.
    #[arg(long, value_name = "YEARS", default_value_t = 0.5)]
    pub grid_step: f64,

    #[arg(long, value_enum, default_value = "return-rate")]
    pub objective: ObjectiveArg,

    /// Constant thinning response with this growth boost.
    #[arg(long, conflicts_with = "decay")]
    pub delta: Option<f64>,

    /// Decaying thinning response with this decay rate (1/year).
    #[arg(long)]
    pub decay: Option<f64>,

    /// Maximum thinnings per schedule in the thinning search (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub max_events: usize,

    /// Rotation age overriding the scenario plan, in years.
    #[arg(long, value_name = "YEARS")]
    pub rotation: Option<f64>,

    /// Window start times for the price-invariance table.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub offsets: Option<Vec<f64>>,

    /// Print nothing on success.
    #[arg(long)]
    pub quiet: bool,
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let quiet = cli.quiet;
    let result = Options::from_cli(&cli).and_then(|options| {
        let scenario = load_scenario(&cli.scenario)?;
        run(cli.command, &scenario, &options)
    });
    match result {
        Ok(outcome) => {
            if !quiet {
                for line in &outcome.lines {
                    println!("{line}");
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
