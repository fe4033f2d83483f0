//! Command-line front end for the consortium chemostat library.
//!
//! Every subcommand resolves one parameter set (the calibrated defaults,
//! a `--params` file, or the `CONSORTIUM_PARAMS` path), writes its
//! results plus a `run_manifest.json` into `--out`, and prints a short
//! summary. Outputs never embed timestamps or machine state, so a rerun
//! with the same manifest reproduces every file byte for byte.

mod commands;
mod output;
mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use consortium::Error;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "consortium",
    version,
    about = "Steady states, optimization, and simulation of an algal-bacterial chemostat"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Parameter file (`key = value` lines); defaults to the calibrated
    /// set.
    #[arg(long, global = true, env = "CONSORTIUM_PARAMS", value_name = "FILE")]
    pub params: Option<PathBuf>,

    /// Directory for result files and the run manifest.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    /// On-disk format for tabular outputs; reports stay JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads for grid sweeps; never changes results.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Seed for sampled inputs (only the default simulation start).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print and save the resolved parameter set with its derived bounds.
    Params,
    /// Closed-form equilibria, thresholds, residuals, and spectra at one
    /// operating point.
    Equilibria(PointArgs),
    /// Regime classification at one operating point.
    Classify(PointArgs),
    /// Integrate the dynamics and save the trajectory.
    Simulate(SimulateArgs),
    /// Maximize a steady-state objective over the admissible controls.
    Optimize(OptimizeArgs),
    /// Sweep the productivity-consumption Pareto front.
    Pareto(ParetoArgs),
    /// Classify the feed-threshold Hessian over the control grid.
    HessianMap(HessianMapArgs),
    /// Reachable objective clouds and their nesting across feeds.
    Reachable(ReachableArgs),
}

#[derive(Args, Serialize)]
pub struct PointArgs {
    /// Light fraction in (0, 1).
    #[arg(long)]
    pub alpha: f64,
    /// Dilution rate [1/day].
    #[arg(long)]
    pub d: f64,
    /// Glucose feed concentration [g/L].
    #[arg(long)]
    pub s_in: f64,
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// Light fraction in [0, 1].
    #[arg(long)]
    pub alpha: f64,
    /// Dilution rate >= 0 [1/day].
    #[arg(long)]
    pub d: f64,
    /// Glucose feed concentration >= 0 [g/L].
    #[arg(long)]
    pub s_in: f64,
    /// Start state `s,e,v,q,c`; default is a seeded 1% perturbation of
    /// the attracting equilibrium (interior controls only).
    #[arg(long, value_name = "S,E,V,Q,C")]
    pub x0: Option<String>,
    /// Time horizon [days].
    #[arg(long, default_value_t = 1000.0)]
    pub t_end: f64,
    /// Stop early once the vector field drops below this max-norm; 0
    /// integrates the full horizon.
    #[arg(long, default_value_t = 1e-7)]
    pub stop_tol: f64,
    /// Also render the trajectory as an SVG line plot.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Serialize)]
pub struct OptimizeArgs {
    #[command(subcommand)]
    pub objective: ObjectiveCmd,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveCmd {
    /// Algal productivity d c*.
    Pout {
        /// Glucose feed concentration [g/L].
        #[arg(long)]
        s_in: f64,
        /// Cross-check grid resolution; 0 skips the oracle.
        #[arg(long, default_value_t = 400)]
        grid_n: usize,
        /// Also save the full objective grid for contour plots.
        #[arg(long)]
        emit_grid: bool,
    },
    /// Weighted profit theta P_out - (1 - theta) P_in.
    Ptheta {
        /// Profit weight in [0, 1].
        #[arg(long)]
        theta: f64,
        /// Glucose feed concentration [g/L].
        #[arg(long)]
        s_in: f64,
        /// Cross-check grid resolution; 0 skips the oracle.
        #[arg(long, default_value_t = 400)]
        grid_n: usize,
        /// Also save the full objective grid for contour plots.
        #[arg(long)]
        emit_grid: bool,
    },
    /// Productivity per unit feed over the light fraction at fixed
    /// dilution.
    YieldAlpha {
        /// Dilution rate [1/day].
        #[arg(long)]
        d: f64,
        /// Glucose feed concentration [g/L].
        #[arg(long)]
        s_in: f64,
    },
}

#[derive(Args, Serialize)]
pub struct ParetoArgs {
    /// Glucose feed concentration [g/L].
    #[arg(long)]
    pub s_in: f64,
    /// Number of weights on the uniform [0, 1] grid.
    #[arg(long, default_value_t = 101)]
    pub theta_n: usize,
    /// Resolution of the dominance-check grid (also used for clouds).
    #[arg(long, default_value_t = 400)]
    pub grid_n: usize,
    /// Feed upper bound for the three-dimensional weight profile.
    #[arg(long)]
    pub z: Option<f64>,
    /// Also sweep the optimal feed choice against the weight (needs
    /// --z).
    #[arg(long)]
    pub theta_profile: bool,
    /// Comma-separated ascending feeds; emits one reachable cloud each.
    #[arg(long, value_name = "S1,S2,...")]
    pub sin_list: Option<String>,
    /// Also render the front as an SVG scatter plot.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Serialize)]
pub struct HessianMapArgs {
    /// Glucose feed concentration [g/L].
    #[arg(long)]
    pub s_in: f64,
    /// Map resolution.
    #[arg(long, default_value_t = 100)]
    pub grid_n: usize,
}

#[derive(Args, Serialize)]
pub struct ReachableArgs {
    /// Comma-separated ascending feeds.
    #[arg(long, value_name = "S1,S2,...")]
    pub sin_list: String,
    /// Cloud and nesting grid resolution.
    #[arg(long, default_value_t = 200)]
    pub grid_n: usize,
}

/// Library failures keep their exit-code class; anything filesystem-side
/// is its own bucket.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "io failure: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

/// 2 = validation, 3 = infeasibility, 4 = numerical failure, 1 = io.
fn exit_code(err: &CliError) -> u8 {
    match err {
        CliError::Lib(e) => match e {
            Error::Domain { .. } | Error::Params(_) | Error::Precondition(_) => 2,
            Error::Existence(_) | Error::Infeasible(_) => 3,
            Error::NoConvergence { .. } | Error::StepUnderflow { .. } | Error::Numerical(_) => 4,
        },
        CliError::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
