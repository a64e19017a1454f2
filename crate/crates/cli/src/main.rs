//! `superchain`: sample superchains, diagnose draws with nested R̂, query the
//! Langevin oracle and run the experiment bundles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod benchmarks;
mod bundle;
mod diagnose;
mod experiment;
mod oracle;
mod sample;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use superchain::targets::TargetError;

/// Exit statuses shared by every subcommand.
pub mod exit {
    pub const OK: u8 = 0;
    pub const NOT_CONVERGED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const MISSING_PREREQUISITE: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] superchain::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => exit::USAGE,
            Self::Lib(e) if missing_prerequisite(e) => exit::MISSING_PREREQUISITE,
            Self::Lib(_) => exit::USAGE,
        }
    }
}

fn missing_prerequisite(e: &superchain::Error) -> bool {
    use superchain::{Error, ExperimentError, SamplerError};
    let target = match e {
        Error::Target(t) => t,
        Error::Experiment(ExperimentError::Target(t)) => t,
        Error::Sampler(SamplerError::Target(t)) => t,
        Error::Experiment(ExperimentError::Sampler(SamplerError::Target(t))) => t,
        _ => return false,
    };
    matches!(target, TargetError::MissingBenchmark { .. })
        || matches!(target, TargetError::Io(io) if io.kind() == std::io::ErrorKind::NotFound)
}

macro_rules! lib_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Lib(e.into())
            }
        }
    )*};
}

lib_error!(
    superchain::config::ConfigError,
    superchain::DrawsError,
    superchain::DiagnosticError,
    superchain::SamplerError,
    superchain::TargetError,
    superchain::OracleError,
    superchain::ExperimentError,
    std::io::Error
);

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "superchain", version, about = "Nested R-hat diagnostics for many short MCMC chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run K×M chains on a registered target and write the sampling draws.
    Sample(sample::SampleArgs),
    /// Compute nested R̂ on a draw file; exit 0 if converged, 1 otherwise.
    Diagnose(diagnose::DiagnoseArgs),
    /// Closed-form Langevin quantities on a T grid, or reliability bounds.
    Oracle(oracle::OracleArgs),
    /// Run one of the experiment bundles.
    Experiment(ExperimentArgs),
    /// Estimate and cache reference moments for targets without closed forms.
    ComputeBenchmarks(benchmarks::BenchmarkArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentName {
    Sweep,
    Fraction,
    RatioVariance,
    Reliability,
    BenchmarksFigure,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    /// Flat `key=value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub target: Option<String>,
    /// Divide the default chain count by this factor.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plots: bool,
    /// Full-size grid (scale 1, every target for sweeps).
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Directory holding data files and `benchmarks/`.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("SUPERCHAIN_THREADS") {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("SUPERCHAIN_THREADS must be a positive integer, got `{raw}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Sample(a) => sample::run(a),
        Command::Diagnose(a) => diagnose::run(a),
        Command::Oracle(a) => oracle::run(a),
        Command::Experiment(a) => experiment::run(a),
        Command::ComputeBenchmarks(a) => benchmarks::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
