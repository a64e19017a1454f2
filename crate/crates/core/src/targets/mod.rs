//! Target distributions: log-density with hand-derived gradient, plus the
//! reference moments used to score Monte Carlo estimates.

mod benchmark;
pub mod data;
mod eight_schools;
mod gaussian;
mod german_credit;
mod item_response;
mod mixture;
mod pharmacokinetics;
mod rosenbrock;

pub use benchmark::{
    benchmark_moments, load_cached_benchmark, save_cached_benchmark, BenchmarkCache,
    BenchmarkMoments, OracleConfig, Provenance,
};
pub use eight_schools::EightSchools;
pub use gaussian::Gaussian;
pub use german_credit::GermanCredit;
pub use item_response::ItemResponse;
pub use mixture::GaussianMixture;
pub use pharmacokinetics::{PkPatient, Pharmacokinetics};
pub use rosenbrock::Rosenbrock;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("unknown target `{0}`; registered targets: {list}", list = TARGET_IDS.join(", "))]
    Unknown(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    Ingest {
        path: String,
        line: usize,
        message: String,
    },
    #[error("no benchmark moments cached for `{target}` at {path}; run `superchain compute-benchmarks --target {target}`")]
    MissingBenchmark { target: String, path: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A differentiable log-density on `R^D`.
pub trait TargetModel: Send + Sync {
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    /// Returns `log π(θ)` (up to a constant) and writes `∇ log π(θ)` into `grad`.
    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    fn log_density(&self, theta: &[f64]) -> f64 {
        let mut grad = vec![0.0; self.dim()];
        self.log_density_and_gradient(theta, &mut grad)
    }

    /// Closed-form per-coordinate moments, when known.
    fn analytic_moments(&self) -> Option<BenchmarkMoments> {
        None
    }
}

/// Identifiers accepted by [`load_target`].
pub const TARGET_IDS: &[&str] = &[
    "gaussian",
    "rosenbrock",
    "mixture",
    "eight_schools",
    "german_credit",
    "german_credit_synthetic",
    "pharmacokinetics",
    "item_response",
];

/// Directory with the bundled data files and benchmark cache of this crate.
pub fn default_data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// Build a registered target. `data_dir` is only consulted for datasets that
/// are not bundled (`german_credit` reads `german.data-numeric` from it).
pub fn load_target(id: &str, data_dir: Option<&Path>) -> Result<Arc<dyn TargetModel>, TargetError> {
    let target: Arc<dyn TargetModel> = match id {
        "gaussian" => Arc::new(Gaussian::standard(1)),
        "rosenbrock" => Arc::new(Rosenbrock),
        "mixture" | "bimodal" => Arc::new(GaussianMixture::bimodal()),
        "eight_schools" => Arc::new(EightSchools::bundled()),
        "german_credit" => {
            let dir = data_dir.map(Path::to_path_buf).unwrap_or_else(default_data_dir);
            Arc::new(GermanCredit::from_path(&dir.join("german.data-numeric"), true)?)
        }
        "german_credit_synthetic" => Arc::new(GermanCredit::bundled_synthetic()),
        "pharmacokinetics" | "pk" => Arc::new(Pharmacokinetics::bundled()),
        "item_response" | "irt" => Arc::new(ItemResponse::bundled()),
        other => return Err(TargetError::Unknown(other.to_string())),
    };
    Ok(target)
}

/// Largest relative discrepancy between the analytic gradient and central
/// finite differences with step `1e-5·(1 + |θ_i|)` over the given coordinates.
///
/// The discrepancy is measured as `|g − fd| / max(|g|, |fd|, 1)`, so gradient
/// entries near zero are compared absolutely.
pub fn finite_difference_error(target: &dyn TargetModel, theta: &[f64], coords: &[usize]) -> f64 {
    let mut grad = vec![0.0; target.dim()];
    target.log_density_and_gradient(theta, &mut grad);
    let mut probe = theta.to_vec();
    let mut worst: f64 = 0.0;
    for &i in coords {
        let h = 1e-5 * (1.0 + theta[i].abs());
        probe[i] = theta[i] + h;
        let up = target.log_density(&probe);
        probe[i] = theta[i] - h;
        let down = target.log_density(&probe);
        probe[i] = theta[i];
        let fd = (up - down) / (2.0 * h);
        let scale = grad[i].abs().max(fd.abs()).max(1.0);
        worst = worst.max((grad[i] - fd).abs() / scale);
    }
    worst
}

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub(crate) fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * LN_2PI
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(softplus(x), sigmoid(x))` from a single exponential.
#[inline]
pub(crate) fn softplus_sigmoid(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let sp = x.max(0.0) + e.ln_1p();
    let sg = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    (sp, sg)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
