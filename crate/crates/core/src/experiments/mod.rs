//! Desk-scale versions of the empirical studies: warmup sweeps with the
//! scaled squared error, exceedance curves, variance of the nested ratio,
//! reliability grids and the Rosenbrock short-chain figure.

mod benchmark;
mod figure;
pub mod plot;
mod reliability;
mod sweep;
mod variance;

pub use benchmark::compute_benchmark;
pub use figure::{rosenbrock_figure, write_figure_csv, FigurePoint, RosenbrockFigurePlan};
pub use reliability::{
    langevin_cross_check, reliability_study, CrossCheckPoint, ReliabilityPlan, ReliabilityPoint,
    ReliabilitySummary, ReliabilityTarget, Verdict,
};
pub use sweep::{
    default_epsilon_grid, default_warmups, fraction_above_quantile, median_curve, run_sweep,
    scaled_squared_error, sweep_spearman, write_fraction_csv, write_sweep_csv, ErrorRecord,
    FractionPoint, SweepPlan, CHI2_1_Q95, MIN_SUPPORT,
};
pub use variance::{ratio_variance_study, write_ratio_variance_csv, RatioVariancePlan, RatioVariancePoint};

use thiserror::Error;

use crate::chain_store::DrawsError;
use crate::diagnostics::DiagnosticError;
use crate::langevin_oracle::OracleError;
use crate::samplers::SamplerError;
use crate::targets::TargetError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Diagnostic(#[from] DiagnosticError),
    #[error(transparent)]
    Draws(#[from] DrawsError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
