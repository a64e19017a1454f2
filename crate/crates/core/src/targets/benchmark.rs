use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TargetError, TargetModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    LongRunOracle,
}

/// Reference mean and variance of every coordinate of a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub provenance: Provenance,
}

impl BenchmarkMoments {
    pub fn analytic(mean: Vec<f64>, variance: Vec<f64>) -> Self {
        assert_eq!(mean.len(), variance.len());
        assert!(variance.iter().all(|&v| v > 0.0));
        Self {
            mean,
            variance,
            provenance: Provenance::Analytic,
        }
    }
}

/// Sampler settings that produced a cached oracle estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub sampler: String,
    pub step_size: f64,
    pub leapfrog: usize,
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub seed: u64,
}

/// On-disk form of `benchmarks/<target>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCache {
    pub target: String,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Smallest per-coordinate effective sample size of the oracle run.
    pub min_ess: f64,
    pub acceptance_rate: f64,
    pub config: OracleConfig,
}

fn cache_path(dir: &Path, target: &str) -> PathBuf {
    dir.join("benchmarks").join(format!("{target}.json"))
}

pub fn load_cached_benchmark(dir: &Path, target: &str) -> Result<BenchmarkCache, TargetError> {
    let path = cache_path(dir, target);
    let text = fs::read_to_string(&path).map_err(|_| TargetError::MissingBenchmark {
        target: target.to_string(),
        path: path.display().to_string(),
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_cached_benchmark(dir: &Path, cache: &BenchmarkCache) -> Result<PathBuf, TargetError> {
    let path = cache_path(dir, &cache.target);
    fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
    fs::write(&path, serde_json::to_string_pretty(cache)? + "\n")?;
    Ok(path)
}

/// Analytic moments when the target has them, otherwise the cached oracle
/// estimate under `dir/benchmarks/`.
pub fn benchmark_moments(target: &dyn TargetModel, dir: &Path) -> Result<BenchmarkMoments, TargetError> {
    if let Some(m) = target.analytic_moments() {
        return Ok(m);
    }
    let cache = load_cached_benchmark(dir, target.id())?;
    if cache.mean.len() != target.dim() || cache.variance.len() != target.dim() {
        return Err(TargetError::Config(format!(
            "benchmark cache for `{}` has dimension {}, target has {}",
            target.id(),
            cache.mean.len(),
            target.dim()
        )));
    }
    Ok(BenchmarkMoments {
        mean: cache.mean,
        variance: cache.variance,
        provenance: Provenance::LongRunOracle,
    })
}
