//! Nested R̂ convergence diagnostics for running many short Markov chains in
//! parallel, grouped into superchains that share an initial point.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain_store;
pub mod config;
pub mod diagnostics;
pub mod experiments;
pub mod langevin_oracle;
pub mod rng;
pub mod samplers;
pub mod stats;
pub mod targets;

pub use chain_store::{build_draws, summarize, ChainDraws, DrawsError, MomentSummary, Phase, SuperchainLayout};
pub use diagnostics::{
    diagnose, ess1_from_ratio, nested_rhat, rhat, threshold, DiagnosticError, DiagnosticReport,
    NestedRhatComponents, RhatComponents, ThresholdPolicy,
};
pub use experiments::ExperimentError;
pub use langevin_oracle::OracleError;
pub use samplers::SamplerError;
pub use targets::TargetError;

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Draws(#[from] DrawsError),
    #[error(transparent)]
    Diagnostic(#[from] DiagnosticError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
