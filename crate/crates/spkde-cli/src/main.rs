//! Command-line front end: fit estimators, generate synthetic
//! contaminated data, run the evaluation pipeline, and apply the
//! infinite-sample decontamination oracle to grid densities.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric failure.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "spkde", version, about = "Robust kernel density estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a density estimate to a CSV of samples and write a model file.
    Fit(FitArgs),
    /// Generate synthetic contaminated samples plus ground-truth grids.
    Synth(SynthArgs),
    /// Run the contaminated-training benchmark and write reports.
    Eval(EvalArgs),
    /// Apply the scale-and-slice transform to a grid density.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV (feature columns, optional trailing `label` column).
    #[arg(long)]
    input: std::path::PathBuf,
    /// Estimator: kde, spkde or rejkde.
    #[arg(long)]
    method: String,
    /// Kernel family.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Fixed bandwidth; mutually exclusive with --sigma-grid.
    #[arg(long)]
    sigma: Option<f64>,
    /// Bandwidth line-search grid as lo:hi:count (log-spaced).
    #[arg(long, value_name = "LO:HI:COUNT")]
    sigma_grid: Option<String>,
    /// Robustness scale for spkde (>= 1).
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Fraction of lowest-scoring samples dropped by rejkde.
    #[arg(long, default_value_t = 0.1)]
    reject_fraction: f64,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Solver iteration cap.
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Named scenario (`fig4` is built in).
    #[arg(long)]
    scenario: Option<String>,
    /// Full scenario spec from a JSON file instead of a named scenario.
    #[arg(long)]
    spec_json: Option<std::path::PathBuf>,
    /// Override the scenario's sample count.
    #[arg(long)]
    n: Option<usize>,
    /// Override the scenario's contamination rate.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid cell size for the ground-truth tabulations.
    #[arg(long, default_value_t = 1e-3)]
    grid_h: f64,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled dataset CSV; repeat for multiple datasets.
    #[arg(long)]
    data: Vec<std::path::PathBuf>,
    /// Synthetic scenario instead of dataset files.
    #[arg(long)]
    scenario: Option<String>,
    /// Label-0 pool size for synthetic scenarios.
    #[arg(long, default_value_t = 1500)]
    pool_n0: usize,
    /// Label-1 pool size for synthetic scenarios.
    #[arg(long, default_value_t = 800)]
    pool_n1: usize,
    /// Contamination rates.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3")]
    eps: Vec<f64>,
    /// Methods to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "kde,spkde,rejkde")]
    methods: Vec<String>,
    /// Number of resampling repetitions (seeds `seed..seed+seeds`).
    #[arg(long, default_value_t = 15)]
    seeds: usize,
    /// Label-0 training-set size per cell.
    #[arg(long, default_value_t = 400)]
    n0: usize,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    reject_fraction: f64,
    #[arg(long, value_name = "LO:HI:COUNT")]
    sigma_grid: Option<String>,
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Also write pairwise Wilcoxon comparison tables across datasets.
    #[arg(long)]
    wilcoxon: bool,
    /// Solver tolerance (looser than the fit default: evaluation solves
    /// hundreds of cells).
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Input grid density CSV.
    #[arg(long)]
    grid: Option<std::path::PathBuf>,
    /// Named scenario; its observed-mixture grid is the input.
    #[arg(long)]
    scenario: Option<String>,
    /// Grid cell size used when tabulating a scenario.
    #[arg(long, default_value_t = 1e-3)]
    grid_h: f64,
    /// Scale directly by beta (> 1).
    #[arg(long)]
    beta: Option<f64>,
    /// Scale by 1/(1-eps) instead of giving beta.
    #[arg(long)]
    eps: Option<f64>,
    /// Target grid CSV to report the L1 recovery error against.
    #[arg(long)]
    truth: Option<std::path::PathBuf>,
    #[arg(long)]
    out: std::path::PathBuf,
}

/// Failures split by exit code: usage/input problems exit 2, numeric
/// failures exit 3.
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl From<spkde::Error> for CliError {
    fn from(e: spkde::Error) -> Self {
        match e {
            spkde::Error::Numeric(m) => CliError::Numeric(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Synth(args) => commands::synth(args),
        Command::Eval(args) => commands::eval(args),
        Command::Oracle(args) => commands::oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
