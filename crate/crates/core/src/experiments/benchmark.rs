use std::sync::Arc;

use super::ExperimentError;
use crate::samplers::{default_tuning, Ensemble, InitDistribution, InitScheme, Kernel, SamplerConfig, SamplerKind};
use crate::stats::KahanSum;
use crate::targets::{BenchmarkCache, OracleConfig, TargetModel};

/// Batches per chain for the batch-means effective sample size.
const BATCHES: usize = 20;

impl OracleConfig {
    /// HMC with the target's default tuning. The run length is 64 chains ×
    /// 20000 draws, shortened for targets whose gradient is expensive.
    pub fn for_target(target: &str) -> Self {
        let t = default_tuning(target);
        let (chains, warmup, draws) = match target {
            "item_response" => (8, 500, 1_500),
            "pharmacokinetics" => (16, 2_000, 5_000),
            "german_credit" | "german_credit_synthetic" => (32, 1_000, 5_000),
            _ => (64, 2_000, 20_000),
        };
        Self {
            sampler: t.kind.to_string(),
            step_size: t.step_size,
            leapfrog: t.leapfrog,
            chains,
            warmup,
            draws,
            seed: 0,
        }
    }
}

/// Long-run estimate of every coordinate's mean and variance from
/// independently started chains. Draws are streamed, so memory does not grow
/// with the run length; `min_ess` uses batch means with 20 batches per chain.
pub fn compute_benchmark(target: Arc<dyn TargetModel>, config: &OracleConfig) -> Result<BenchmarkCache, ExperimentError> {
    if config.chains < 2 || config.draws < BATCHES {
        return Err(ExperimentError::InvalidPlan(format!(
            "the oracle needs at least 2 chains and {BATCHES} draws per chain"
        )));
    }
    let kind: SamplerKind = config.sampler.parse().map_err(ExperimentError::InvalidPlan)?;
    let sampler = SamplerConfig {
        kind,
        step_size: config.step_size,
        leapfrog: config.leapfrog,
        warmup: config.warmup,
        sampling: config.draws,
    };
    let tuning = default_tuning(target.id());
    let d = target.dim();
    let id = target.id().to_string();
    let init = InitDistribution::isotropic(d, tuning.init_mu0, tuning.init_sigma0)?;
    let kernel = Kernel::mcmc(target, &sampler)?;
    let mut ensemble = Ensemble::new(config.chains, 1, config.seed, kernel, &init, InitScheme::Independent)?;
    ensemble.advance(config.warmup);
    ensemble.reset_acceptance();

    let batch = config.draws / BATCHES;
    let used = batch * BATCHES;
    let c = config.chains;
    // per (chain, batch, dim) sums, and per dim first and second moments
    let mut batch_sums = vec![0.0; c * BATCHES * d];
    let mut sum = vec![KahanSum::new(); d];
    let mut sum_sq = vec![KahanSum::new(); d];
    for i in 0..used {
        ensemble.advance(1);
        let snap = ensemble.snapshot();
        let b = i / batch;
        for (chain, x) in snap.values().chunks_exact(d).enumerate() {
            let row = &mut batch_sums[(chain * BATCHES + b) * d..][..d];
            for j in 0..d {
                row[j] += x[j];
                sum[j].add(x[j]);
                sum_sq[j].add(x[j] * x[j]);
            }
        }
    }
    let acceptance_rate = ensemble.acceptance_rates().iter().sum::<f64>() / c as f64;

    let total = (c * used) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s.value() / total).collect();
    let variance: Vec<f64> = (0..d)
        .map(|j| (sum_sq[j].value() - total * mean[j] * mean[j]) / (total - 1.0))
        .collect();
    let min_ess = (0..d)
        .map(|j| {
            let ss: f64 = (0..c * BATCHES)
                .map(|cb| (batch_sums[cb * d + j] / batch as f64 - mean[j]).powi(2))
                .sum();
            let batch_var = ss / (c * BATCHES - 1) as f64;
            let tau = batch as f64 * batch_var / variance[j];
            total / tau.max(1.0 / total)
        })
        .fold(f64::INFINITY, f64::min);

    Ok(BenchmarkCache {
        target: id,
        mean,
        variance,
        min_ess,
        acceptance_rate,
        config: OracleConfig {
            draws: used,
            ..config.clone()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::Gaussian;

    #[test]
    fn oracle_recovers_gaussian_moments() {
        let target: Arc<dyn TargetModel> = Arc::new(Gaussian::new(vec![1.0, -2.0], vec![2.0, 0.5]));
        let config = OracleConfig {
            sampler: "hmc".into(),
            step_size: 0.3,
            leapfrog: 6,
            chains: 16,
            warmup: 200,
            draws: 2_000,
            seed: 4,
        };
        let cache = compute_benchmark(target, &config).unwrap();
        assert_eq!(cache.target, "gaussian");
        let tol = |v: f64| 5.0 * (v / cache.min_ess).sqrt();
        assert!((cache.mean[0] - 1.0).abs() < tol(4.0));
        assert!((cache.mean[1] + 2.0).abs() < tol(0.25));
        assert!((cache.variance[0] / 4.0 - 1.0).abs() < 0.1);
        assert!((cache.variance[1] / 0.25 - 1.0).abs() < 0.1);
        assert!(cache.min_ess > 1_000.0 && cache.min_ess <= 2.0 * 32_000.0);
        assert!(cache.acceptance_rate > 0.5);
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let target: Arc<dyn TargetModel> = Arc::new(Gaussian::standard(1));
        let mut config = OracleConfig::for_target("gaussian");
        config.chains = 1;
        assert!(compute_benchmark(target.clone(), &config).is_err());
        config.chains = 2;
        config.sampler = "nuts".into();
        assert!(compute_benchmark(target, &config).is_err());
    }
}
