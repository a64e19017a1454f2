use std::io::Write;

use serde::Serialize;

use super::ExperimentError;
use crate::chain_store::ChainDraws;
use crate::diagnostics::{nested_rhat, rhat};
use crate::samplers::{Ensemble, InitDistribution, InitScheme, Kernel};
use crate::targets::BenchmarkMoments;

/// Few long chains against many short ones on the first coordinate: `few`
/// independent chains, and `k × m` chains started from `k` shared points.
/// Both take `warmup` transitions, then up to `max_n` sampling draws.
#[derive(Clone)]
pub struct RosenbrockFigurePlan {
    pub kernel: Kernel,
    pub init: InitDistribution,
    pub warmup: usize,
    pub few: usize,
    pub k: usize,
    pub m: usize,
    /// Sampling lengths at which the estimators are evaluated.
    pub ns: Vec<usize>,
    pub seed: u64,
}

impl RosenbrockFigurePlan {
    /// `n = 1, 2, 4, …` up to and including `max_n`.
    pub fn doubling(max_n: usize) -> Vec<usize> {
        let mut ns: Vec<usize> = std::iter::successors(Some(1usize), |n| Some(n * 2))
            .take_while(|&n| n <= max_n)
            .collect();
        if ns.last() != Some(&max_n) && max_n > 0 {
            ns.push(max_n);
        }
        ns
    }
}

/// Estimates after `n` sampling draws. R̂ is `NaN` when undefined (`n = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigurePoint {
    pub n: usize,
    /// `(θ̄₁ − E θ₁)² / Var θ₁` with the few chains.
    pub sq_error_few: f64,
    pub sq_error_many: f64,
    pub rhat_few: f64,
    /// Classic R̂ treating all `k·m` chains as one flat population.
    pub rhat_many: f64,
    pub nrhat: f64,
}

fn sq_error(draws: &ChainDraws, benchmark: &BenchmarkMoments) -> f64 {
    let grand = draws.summarize().grand_mean(0);
    (grand - benchmark.mean[0]).powi(2) / benchmark.variance[0]
}

pub fn rosenbrock_figure(
    plan: &RosenbrockFigurePlan,
    benchmark: &BenchmarkMoments,
) -> Result<Vec<FigurePoint>, ExperimentError> {
    let max_n = plan.ns.iter().copied().max().unwrap_or(0);
    if max_n == 0 || plan.ns.contains(&0) || plan.few < 2 || plan.k < 2 || plan.m == 0 {
        return Err(ExperimentError::InvalidPlan(
            "need sampling lengths ≥ 1, at least 2 few-chains and K ≥ 2".into(),
        ));
    }
    let mut few = Ensemble::new(plan.few, 1, plan.seed, plan.kernel.clone(), &plan.init, InitScheme::Independent)?;
    let mut many = Ensemble::new(
        plan.k,
        plan.m,
        plan.seed.wrapping_add(1),
        plan.kernel.clone(),
        &plan.init,
        InitScheme::Superchain,
    )?;
    few.advance(plan.warmup);
    many.advance(plan.warmup);
    let few = few.sample(max_n)?;
    let many = many.sample(max_n)?;

    plan.ns
        .iter()
        .map(|&n| {
            let f = few.truncate_draws(n)?;
            let g = many.truncate_draws(n)?;
            let flat_rhat = |d: &ChainDraws| rhat(d).map(|c| c[0].r_hat).unwrap_or(f64::NAN);
            Ok(FigurePoint {
                n,
                sq_error_few: sq_error(&f, benchmark),
                sq_error_many: sq_error(&g, benchmark),
                rhat_few: flat_rhat(&f),
                rhat_many: flat_rhat(&g),
                nrhat: nested_rhat(&g).map(|c| c[0].nr_hat).unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// Columns `n,sq_error_<few>,sq_error_<KM>,rhat_<few>,rhat_<KM>,nrhat`.
pub fn write_figure_csv<W: Write>(plan: &RosenbrockFigurePlan, points: &[FigurePoint], mut out: W) -> std::io::Result<()> {
    let (a, b) = (plan.few, plan.k * plan.m);
    writeln!(out, "n,sq_error_{a},sq_error_{b},rhat_{a},rhat_{b},nrhat")?;
    for p in points {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?}",
            p.n, p.sq_error_few, p.sq_error_many, p.rhat_few, p.rhat_many, p.nrhat
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::SamplerConfig;
    use crate::targets::{Gaussian, TargetModel};
    use std::sync::Arc;

    fn plan(ns: Vec<usize>) -> RosenbrockFigurePlan {
        let target: Arc<dyn TargetModel> = Arc::new(Gaussian::standard(2));
        RosenbrockFigurePlan {
            kernel: Kernel::mcmc(target, &SamplerConfig::hmc(0.5, 4, 0, 1)).unwrap(),
            init: InitDistribution::isotropic(2, 0.0, 1.0).unwrap(),
            warmup: 50,
            few: 4,
            k: 4,
            m: 32,
            ns,
            seed: 1,
        }
    }

    #[test]
    fn doubling_grid() {
        assert_eq!(RosenbrockFigurePlan::doubling(32), vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(RosenbrockFigurePlan::doubling(20), vec![1, 2, 4, 8, 16, 20]);
    }

    #[test]
    fn figure_points_are_defined_where_expected() {
        let bench = BenchmarkMoments::analytic(vec![0.0; 2], vec![1.0; 2]);
        let pts = rosenbrock_figure(&plan(RosenbrockFigurePlan::doubling(16)), &bench).unwrap();
        assert_eq!(pts.len(), 5);
        assert!(pts[0].rhat_few.is_nan() && pts[0].rhat_many.is_nan());
        assert!(pts[0].nrhat.is_finite());
        assert!(pts[1..].iter().all(|p| p.rhat_few.is_finite() && p.rhat_many >= 1.0));
        // 128 chains beat 4 chains on average; a loose check on the final point
        assert!(pts[4].sq_error_many < 0.2);
        let mut csv = Vec::new();
        write_figure_csv(&plan(vec![1]), &pts, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("n,sq_error_4,sq_error_128,"));
    }

    #[test]
    fn zero_draws_are_rejected() {
        let bench = BenchmarkMoments::analytic(vec![0.0; 2], vec![1.0; 2]);
        assert!(rosenbrock_figure(&plan(vec![0, 4]), &bench).is_err());
    }
}
