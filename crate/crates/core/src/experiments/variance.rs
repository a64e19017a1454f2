use std::io::Write;

use serde::Serialize;

use super::ExperimentError;
use crate::diagnostics::nested_rhat;
use crate::rng::replication_seed;
use crate::samplers::{Ensemble, InitDistribution, InitScheme, Kernel};
use crate::stats::{mean, sample_variance};

/// Replicated runs measuring the spread of `𝔫B̂/𝔫Ŵ` for each `(K, M)`
/// layout, sampling length `N` and warmup checkpoint. Only the first
/// coordinate of the target is recorded.
#[derive(Clone)]
pub struct RatioVariancePlan {
    pub kernel: Kernel,
    pub init: InitDistribution,
    pub scheme: InitScheme,
    /// `(K, M)` pairs, usually with a common `KM`.
    pub layouts: Vec<(usize, usize)>,
    pub ns: Vec<usize>,
    /// Strictly increasing checkpoints; `0` means no warmup.
    pub warmups: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

impl RatioVariancePlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications < 2 {
            return Err(ExperimentError::InvalidPlan(
                "the variance across replications needs at least 2 replications".into(),
            ));
        }
        if self.layouts.is_empty() || self.ns.is_empty() || self.warmups.is_empty() {
            return Err(ExperimentError::InvalidPlan("layouts, N values and warmups must be non-empty".into()));
        }
        if self.warmups.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::InvalidPlan("warmup lengths must be strictly increasing".into()));
        }
        for &(k, m) in &self.layouts {
            if k < 2 || m == 0 {
                return Err(ExperimentError::InvalidPlan(format!("layout K={k}, M={m} needs K ≥ 2 and M ≥ 1")));
            }
            if m == 1 && self.ns.contains(&1) {
                return Err(ExperimentError::InvalidPlan(format!("layout K={k}, M=1 requires N > 1")));
            }
        }
        if self.ns.contains(&0) {
            return Err(ExperimentError::InvalidPlan("N must be at least 1".into()));
        }
        Ok(())
    }

    /// `(K, KM/K)` for every `K` dividing `km`.
    pub fn layouts_for_total(km: usize, ks: &[usize]) -> Result<Vec<(usize, usize)>, ExperimentError> {
        ks.iter()
            .map(|&k| {
                if k == 0 || !km.is_multiple_of(k) {
                    Err(ExperimentError::InvalidPlan(format!("K={k} does not divide KM={km}")))
                } else {
                    Ok((k, km / k))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioVariancePoint {
    pub scheme: InitScheme,
    pub k: usize,
    pub m: usize,
    pub warmup: usize,
    pub n: usize,
    /// Sample variance of the ratio across replications.
    pub variance: f64,
    pub mean_ratio: f64,
    pub mean_nb: f64,
}

/// Points ordered by layout, then `N`, then warmup, following the plan.
pub fn ratio_variance_study(plan: &RatioVariancePlan) -> Result<Vec<RatioVariancePoint>, ExperimentError> {
    plan.validate()?;
    let mut points = Vec::new();
    for &(k, m) in &plan.layouts {
        for &n in &plan.ns {
            let w = plan.warmups.len();
            let mut ratios = vec![Vec::with_capacity(plan.replications); w];
            let mut nbs = vec![Vec::with_capacity(plan.replications); w];
            for rep in 0..plan.replications {
                let seed = replication_seed(plan.seed, rep as u64);
                let mut ensemble = Ensemble::new(k, m, seed, plan.kernel.clone(), &plan.init, plan.scheme)?;
                for (i, &warmup) in plan.warmups.iter().enumerate() {
                    ensemble.advance(warmup - ensemble.iterations());
                    let draws = ensemble.clone().sample(n)?;
                    let c = &nested_rhat(&draws)?[0];
                    ratios[i].push(c.ratio());
                    nbs[i].push(c.nb_hat);
                }
            }
            for (i, &warmup) in plan.warmups.iter().enumerate() {
                points.push(RatioVariancePoint {
                    scheme: plan.scheme,
                    k,
                    m,
                    warmup,
                    n,
                    variance: sample_variance(&ratios[i]).expect("at least two replications"),
                    mean_ratio: mean(&ratios[i]),
                    mean_nb: mean(&nbs[i]),
                });
            }
        }
    }
    Ok(points)
}

/// Columns `scheme,K,M,warmup,N,variance,mean_ratio,mean_nB`.
pub fn write_ratio_variance_csv<W: Write>(points: &[RatioVariancePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "scheme,K,M,warmup,N,variance,mean_ratio,mean_nB")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{:?},{:?},{:?}",
            p.scheme, p.k, p.m, p.warmup, p.n, p.variance, p.mean_ratio, p.mean_nb
        )?;
    }
    Ok(())
}
