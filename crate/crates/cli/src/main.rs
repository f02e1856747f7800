//! `csskit`: column subset selection from the command line.
//!
//! Exit codes: 0 on success, 2 on invalid flags or unreadable inputs, 3 when
//! a computation fails (the message names the module that raised it).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "csskit", version, about = "Covariance-first column subset selection")]
struct Cli {
    /// Worker threads for restarts, trials and Monte Carlo sampling
    /// (default: all available cores).
    #[arg(long, global = true, env = "CSSKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select k variables (or a range of sizes) from a covariance or data file.
    Select(SelectArgs),
    /// Estimate a covariance matrix from data with missing entries.
    Covest(CovestArgs),
    /// Choose the subset size by sequential Monte Carlo tests.
    ChooseK(ChooseKArgs),
    /// Run a seeded simulation study.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["cov", "data"]))]
pub struct SelectArgs {
    /// Covariance matrix as a p x p CSV grid.
    #[arg(long)]
    pub cov: Option<PathBuf>,
    /// Samples as an n x p CSV; empty, NA and NaN fields are missing.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// The input file starts with a header row.
    #[arg(long)]
    pub header: bool,
    /// Subset size.
    #[arg(long, conflicts_with = "k_range", required_unless_present = "k_range")]
    pub k: Option<usize>,
    /// Inclusive range of subset sizes, `A..B`.
    #[arg(long, value_parser = parse_range)]
    pub k_range: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = Method::Greedy)]
    pub method: Method,
    #[arg(long, default_value = "css", value_parser = ["css", "det", "frob", "cc", "diag-det", "iso-lrt"])]
    pub criterion: String,
    /// Random initialisations for the swap method.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Seed of the random initialisations (required for the swap method).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Work on the correlation matrix.
    #[arg(long)]
    pub standardize: bool,
    /// Covariance estimator for `--data`.
    #[arg(long, value_enum, default_value_t = Missing::PairwisePsd)]
    pub missing: Missing,
    /// Output format of the results.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Results file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run manifest (default: `<out>.manifest.json` when `--out` is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CovestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value_t = Missing::PairwisePsd)]
    pub missing: Missing,
    /// Return the correlation matrix.
    #[arg(long)]
    pub standardize: bool,
    /// Covariance CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Diagnostics JSON (default: `<out>.diagnostics.json`, or standard
    /// error without `--out`).
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ChooseKArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Model::SubsetFactor)]
    pub model: Model,
    /// Monte Carlo draws per critical value.
    #[arg(long, default_value_t = csskit::sizesel::DEFAULT_MC_SAMPLES)]
    pub mc_samples: usize,
    /// Random initialisations of the swapping search at each size.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Seed of both the Monte Carlo draws and the search.
    #[arg(long)]
    pub seed: u64,
    /// Largest size tested (default: p - 1).
    #[arg(long)]
    pub max_k: Option<usize>,
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, value_enum, default_value_t = Missing::PairwisePsd)]
    pub missing: Missing,
    /// Report JSON (default: standard output, with the summary on standard
    /// error).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Samples per trial.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Unique-factor scale of the size-selection scenario (smaller is a
    /// stronger signal).
    #[arg(long, default_value_t = 0.254)]
    pub signal: f64,
    #[arg(long, value_enum, default_value_t = Factors::Gaussian)]
    pub factors: Factors,
    /// Probability of omitting each entry in the missing-data scenario.
    #[arg(long, default_value_t = 0.05)]
    pub mar_prob: f64,
    /// Swap restarts (default: 10 for missing-a1, 5 for sizesel-a2).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = csskit::sizesel::DEFAULT_MC_SAMPLES)]
    pub mc_samples: usize,
    /// Per-trial CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON (default: `<out>.summary.json`, or standard error
    /// without `--out`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Greedy,
    Swap,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Missing {
    PairwisePsd,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    SubsetFactor,
    Pcss,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    MissingA1,
    SizeselA2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factors {
    Gaussian,
    Mixed,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start '{a}'"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end '{b}'"))?;
    if a == 0 || a > b {
        return Err(format!("range {a}..{b} must satisfy 1 <= A <= B"));
    }
    Ok((a, b))
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or unreadable inputs (exit 2).
    Usage(String),
    /// A computation or output failed (exit 3).
    Compute(String),
}

impl From<csskit::Error> for CliError {
    fn from(e: csskit::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        Some(t) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                eprintln!("error: cannot start the thread pool: {e}");
                return ExitCode::from(3);
            }
            t
        }
        None => rayon::current_num_threads(),
    };
    let result = match &cli.command {
        Command::Select(a) => commands::select(a, threads),
        Command::Covest(a) => commands::covest(a, threads),
        Command::ChooseK(a) => commands::choose_k(a, threads),
        Command::Simulate(a) => commands::simulate(a, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
