use std::io::Write;

use serde::Serialize;

use super::ExperimentError;
use crate::chain_store::ChainDraws;
use crate::diagnostics::{nested_rhat, threshold};
use crate::rng::replication_seed;
use crate::samplers::{Ensemble, InitDistribution, InitScheme, Kernel};
use crate::stats::{chi2_quantile, median, spearman, KahanSum};
use crate::targets::BenchmarkMoments;

/// Support required before an exceedance fraction is reported.
pub const MIN_SUPPORT: usize = 100;

/// 0.95 quantile of χ²₁.
pub const CHI2_1_Q95: f64 = 3.841_458_820_694_124;

/// `E²_d = KMN (θ̄_d − E θ_d)² / Var θ_d` for every coordinate. With `N = 1`
/// this is the stationary χ²₁ statistic; `N > 1` scales by all `KMN` draws.
pub fn scaled_squared_error(draws: &ChainDraws, benchmark: &BenchmarkMoments) -> Result<Vec<f64>, ExperimentError> {
    let l = draws.layout();
    if benchmark.mean.len() != l.d || benchmark.variance.len() != l.d {
        return Err(ExperimentError::InvalidPlan(format!(
            "benchmark has dimension {}, draws have {}",
            benchmark.mean.len(),
            l.d
        )));
    }
    let count = (l.k * l.m * l.n) as f64;
    let mut sums = vec![KahanSum::new(); l.d];
    for row in draws.values().chunks_exact(l.d) {
        for (s, v) in sums.iter_mut().zip(row) {
            s.add(*v);
        }
    }
    Ok(sums
        .iter()
        .zip(benchmark.mean.iter().zip(&benchmark.variance))
        .map(|(s, (mean, var))| count * (s.value() / count - mean).powi(2) / var)
        .collect())
}

/// `ℓ = 10, 20, …, 100, 200, …, 1000`.
pub fn default_warmups() -> Vec<usize> {
    (1..=10).map(|i| 10 * i).chain((2..=10).map(|i| 100 * i)).collect()
}

/// A warmup sweep: one long run per replication, checkpointed at each `ℓ`.
#[derive(Clone)]
pub struct SweepPlan {
    pub target: String,
    pub kernel: Kernel,
    pub init: InitDistribution,
    pub scheme: InitScheme,
    pub warmups: Vec<usize>,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub tau: f64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.warmups.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::InvalidPlan("warmup lengths must be strictly increasing".into()));
        }
        if self.warmups.is_empty() || self.replications == 0 {
            return Err(ExperimentError::InvalidPlan("need at least one warmup length and replication".into()));
        }
        if self.k < 2 || self.m == 0 || self.n == 0 {
            return Err(ExperimentError::InvalidPlan("need K ≥ 2, M ≥ 1 and N ≥ 1".into()));
        }
        if self.m == 1 && self.n == 1 {
            return Err(ExperimentError::InvalidPlan("M = 1 requires N > 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub target: String,
    pub dim: usize,
    pub warmup: usize,
    pub rep: usize,
    #[serde(rename = "nRhat")]
    pub nrhat: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    pub threshold: f64,
    /// Some chain accepted no proposal since the previous checkpoint, or
    /// `𝔫R̂` was undefined.
    pub divergent: bool,
}

/// Records sorted by warmup, replication and coordinate. At checkpoint `ℓ`
/// the chains are copied and the copy takes `N` sampling transitions, so the
/// draws of checkpoint `ℓ` are the states after `ℓ + 1, …, ℓ + N` transitions
/// and the main run continues unaffected.
pub fn run_sweep(plan: &SweepPlan, benchmark: &BenchmarkMoments) -> Result<Vec<ErrorRecord>, ExperimentError> {
    plan.validate()?;
    let thr = threshold(plan.tau, plan.m);
    let mut records = Vec::with_capacity(plan.warmups.len() * plan.replications * plan.kernel.dim());
    for rep in 0..plan.replications {
        let seed = replication_seed(plan.seed, rep as u64);
        let mut ensemble = Ensemble::new(plan.k, plan.m, seed, plan.kernel.clone(), &plan.init, plan.scheme)?;
        for &warmup in &plan.warmups {
            ensemble.advance(warmup - ensemble.iterations());
            let divergent = warmup > 0 && ensemble.acceptance_rates().contains(&0.0);
            ensemble.reset_acceptance();
            let draws = ensemble.clone().sample(plan.n)?;
            let e2 = scaled_squared_error(&draws, benchmark)?;
            // a degenerate ensemble (e.g. every chain stuck) has no finite 𝔫R̂
            let (nrhat, degenerate) = match nested_rhat(&draws) {
                Ok(c) => (c.iter().map(|c| c.nr_hat).collect(), false),
                Err(_) => (vec![f64::INFINITY; e2.len()], true),
            };
            for (dim, (nr, e)) in nrhat.into_iter().zip(e2).enumerate() {
                records.push(ErrorRecord {
                    target: plan.target.clone(),
                    dim,
                    warmup,
                    rep,
                    nrhat: nr,
                    e2: e,
                    threshold: thr,
                    divergent: divergent || degenerate,
                });
            }
        }
    }
    records.sort_by_key(|r| (r.warmup, r.rep, r.dim));
    Ok(records)
}

pub fn write_sweep_csv<W: Write>(records: &[ErrorRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "target,dim,warmup,rep,nRhat,E2,threshold")?;
    for r in records {
        writeln!(out, "{},{},{},{},{:?},{:?},{:?}", r.target, r.dim, r.warmup, r.rep, r.nrhat, r.e2, r.threshold)?;
    }
    Ok(())
}

/// One point of the exceedance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionPoint {
    pub epsilon: f64,
    pub fraction: f64,
    pub count: usize,
}

/// `ε` on a log grid from `1e-4` to `10`, plus `+∞` (every record).
pub fn default_epsilon_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=50).map(|i| 10f64.powf(-4.0 + 5.0 * i as f64 / 50.0)).collect();
    grid.push(f64::INFINITY);
    grid
}

/// Fraction of records with `E²` above the χ²₁ 0.95-quantile among those
/// with `𝔫R̂ ≤ 1 + ε`; points with fewer than [`MIN_SUPPORT`] qualifying
/// records are omitted.
pub fn fraction_above_quantile(records: &[ErrorRecord], epsilons: &[f64]) -> Vec<FractionPoint> {
    let q = chi2_quantile(0.95, 1.0);
    epsilons
        .iter()
        .filter_map(|&epsilon| {
            let (count, above) = records
                .iter()
                .filter(|r| r.nrhat <= 1.0 + epsilon)
                .fold((0usize, 0usize), |(c, a), r| (c + 1, a + usize::from(r.e2 > q)));
            (count >= MIN_SUPPORT).then(|| FractionPoint {
                epsilon,
                fraction: above as f64 / count as f64,
                count,
            })
        })
        .collect()
}

pub fn write_fraction_csv<W: Write>(points: &[FractionPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epsilon,fraction,count")?;
    for p in points {
        writeln!(out, "{:?},{:?},{}", p.epsilon, p.fraction, p.count)?;
    }
    Ok(())
}

/// `(ℓ, median 𝔫R̂, median E²)` per warmup length, over replications and
/// coordinates.
pub fn median_curve(records: &[ErrorRecord]) -> Vec<(usize, f64, f64)> {
    let mut warmups: Vec<usize> = records.iter().map(|r| r.warmup).collect();
    warmups.sort_unstable();
    warmups.dedup();
    warmups
        .into_iter()
        .map(|w| {
            let at: Vec<&ErrorRecord> = records.iter().filter(|r| r.warmup == w).collect();
            let nr: Vec<f64> = at.iter().map(|r| r.nrhat).collect();
            let e2: Vec<f64> = at.iter().map(|r| r.e2).collect();
            (w, median(&nr), median(&e2))
        })
        .collect()
}

/// Spearman correlation between the per-`ℓ` medians of `𝔫R̂` and `E²`.
pub fn sweep_spearman(records: &[ErrorRecord]) -> f64 {
    let curve = median_curve(records);
    let nr: Vec<f64> = curve.iter().map(|c| c.1).collect();
    let e2: Vec<f64> = curve.iter().map(|c| c.2).collect();
    spearman(&nr, &e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_store::SuperchainLayout;
    use crate::samplers::{exact_gaussian_chain, SamplerConfig};
    use crate::stats::{chi2_cdf, ks_distance};
    use crate::targets::{Gaussian, TargetModel};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{ChiSquared, Distribution};
    use std::sync::Arc;

    fn benchmark(mean: f64, var: f64, d: usize) -> BenchmarkMoments {
        BenchmarkMoments::analytic(vec![mean; d], vec![var; d])
    }

    #[test]
    fn quantile_constant_matches_the_incomplete_gamma_routine() {
        assert_relative_eq!(chi2_quantile(0.95, 1.0), CHI2_1_Q95, max_relative = 1e-12);
    }

    #[test]
    fn squared_error_arithmetic() {
        let layout = SuperchainLayout::new(32, 64, 1, 1).unwrap();
        let draws = ChainDraws::new(layout, vec![2.1; 2048]).unwrap();
        let e2 = scaled_squared_error(&draws, &benchmark(2.0, 22.0, 1)).unwrap();
        assert_relative_eq!(e2[0], 2048.0 * 0.01 / 22.0, max_relative = 1e-10);
        assert!((e2[0] - 0.9309).abs() < 1e-4);
        let exact = ChainDraws::new(layout, vec![2.0; 2048]).unwrap();
        assert_eq!(scaled_squared_error(&exact, &benchmark(2.0, 22.0, 1)).unwrap(), vec![0.0]);
        assert!(scaled_squared_error(&exact, &benchmark(2.0, 22.0, 2)).is_err());
    }

    #[test]
    fn iid_squared_error_is_chi_squared() {
        let init = InitDistribution::isotropic(1, 0.0, 1.0).unwrap();
        let e2: Vec<f64> = (0..10_000)
            .map(|rep| {
                let l = SuperchainLayout::new(4, 8, 1, 1).unwrap().with_seed(rep);
                let draws = exact_gaussian_chain(0.0, 1.0, l, &init, InitScheme::Independent).unwrap();
                scaled_squared_error(&draws, &benchmark(0.0, 1.0, 1)).unwrap()[0]
            })
            .collect();
        assert!(ks_distance(&e2, |x| chi2_cdf(x, 1.0)) < 0.05);
    }

    fn record(nrhat: f64, e2: f64) -> ErrorRecord {
        ErrorRecord {
            target: "t".into(),
            dim: 0,
            warmup: 1,
            rep: 0,
            nrhat,
            e2,
            threshold: 1.004,
            divergent: false,
        }
    }

    #[test]
    fn chi_squared_records_exceed_the_quantile_five_percent_of_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chi = ChiSquared::new(1.0).unwrap();
        let records: Vec<ErrorRecord> = (0..20_000).map(|_| record(1.0, chi.sample(&mut rng))).collect();
        let pts = fraction_above_quantile(&records, &[0.0, f64::INFINITY]);
        assert_eq!(pts.len(), 2);
        let se = (0.05f64 * 0.95 / 20_000.0).sqrt();
        assert!((pts[1].fraction - 0.05).abs() < 4.0 * se);
    }

    #[test]
    fn thin_support_is_omitted() {
        let mut records: Vec<ErrorRecord> = (0..99).map(|i| record(1.001, i as f64)).collect();
        records.extend((0..300).map(|_| record(2.0, 0.0)));
        let pts = fraction_above_quantile(&records, &[0.01, 0.5, 1.5]);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].count, 399);
        assert!(fraction_above_quantile(&records, &[]).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let few: Vec<ErrorRecord> = (0..5).map(|_| record(1.0, rng.random())).collect();
        assert!(fraction_above_quantile(&few, &[f64::INFINITY]).is_empty());
    }

    fn gaussian_plan(reps: usize, warmups: Vec<usize>) -> SweepPlan {
        let target: Arc<dyn TargetModel> = Arc::new(Gaussian::standard(2));
        SweepPlan {
            target: "gaussian".into(),
            kernel: Kernel::mcmc(target, &SamplerConfig::hmc(0.8, 3, 0, 1)).unwrap(),
            init: InitDistribution::isotropic(2, 3.0, 2.0).unwrap(),
            scheme: InitScheme::Superchain,
            warmups,
            k: 4,
            m: 16,
            n: 1,
            replications: reps,
            seed: 9,
            tau: 1e-4,
        }
    }

    #[test]
    fn sweep_cardinality_order_and_reproducibility() {
        let plan = gaussian_plan(3, vec![5, 10, 40]);
        let records = run_sweep(&plan, &benchmark(0.0, 1.0, 2)).unwrap();
        assert_eq!(records.len(), 3 * 3 * 2);
        let keys: Vec<_> = records.iter().map(|r| (r.warmup, r.rep, r.dim)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(records.iter().all(|r| r.e2 >= 0.0 && r.nrhat >= 1.0));
        assert_eq!(records, run_sweep(&plan, &benchmark(0.0, 1.0, 2)).unwrap());
    }

    #[test]
    fn checkpoint_draws_match_an_independent_run() {
        // the draws at checkpoint ℓ equal a fresh run with warmup ℓ
        let plan = gaussian_plan(1, vec![7, 20]);
        let seed = replication_seed(plan.seed, 0);
        let mut fresh = Ensemble::new(4, 16, seed, plan.kernel.clone(), &plan.init, plan.scheme).unwrap();
        fresh.advance(20);
        let draws = fresh.sample(1).unwrap();
        let records = run_sweep(&plan, &benchmark(0.0, 1.0, 2)).unwrap();
        let e2 = scaled_squared_error(&draws, &benchmark(0.0, 1.0, 2)).unwrap();
        let at20: Vec<f64> = records.iter().filter(|r| r.warmup == 20).map(|r| r.e2).collect();
        assert_eq!(at20, e2);
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let bench = benchmark(0.0, 1.0, 2);
        assert!(run_sweep(&gaussian_plan(1, vec![10, 10]), &bench).is_err());
        assert!(run_sweep(&gaussian_plan(0, vec![10]), &bench).is_err());
        let mut p = gaussian_plan(1, vec![10]);
        p.m = 1;
        assert!(run_sweep(&p, &bench).is_err());
    }

    #[test]
    fn converging_sweep_correlates_nrhat_with_error() {
        let plan = gaussian_plan(4, vec![1, 2, 4, 8, 16, 32, 64]);
        let records = run_sweep(&plan, &benchmark(0.0, 1.0, 2)).unwrap();
        assert!(sweep_spearman(&records) > 0.0);
        let last = median_curve(&records).last().copied().unwrap();
        assert!(last.1 < median_curve(&records)[0].1);
    }

    #[test]
    fn default_grids() {
        let w = default_warmups();
        assert_eq!(w.len(), 19);
        assert_eq!((w[0], w[9], w[10], w[18]), (10, 100, 200, 1000));
        assert!(default_epsilon_grid().last().unwrap().is_infinite());
    }
}
