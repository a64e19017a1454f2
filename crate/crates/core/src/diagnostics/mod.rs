//! R̂ and nested R̂ estimators, the convergence threshold, and population
//! limits of the variance components for chains with a known Gaussian law.
//!
//! Every estimator works per coordinate; nothing is pooled across dimensions.

mod limits;
mod report;

pub use limits::{
    bw_limits_from_chain_law, nested_limits_from_superchain_law, ChainLaw, NestedLimits,
    SuperchainLaw,
};
pub use report::{diagnose, DiagnosticReport, DimensionReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain_store::{ChainDraws, MomentSummary};
use crate::stats::KahanSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticError {
    #[error("insufficient draws: R-hat needs at least 2 draws per chain, got {n}")]
    InsufficientDraws { n: usize },
    #[error("insufficient chains: need at least 2, got {chains}")]
    InsufficientChains { chains: usize },
    #[error("insufficient superchains: need at least 2, got {k}")]
    InsufficientSuperchains { k: usize },
    #[error("nested R-hat needs M > 1 or N > 1 (got M = 1, N = 1)")]
    NoWithinVariation,
    #[error("degenerate variance in dimension {dim}: within-chain variance is zero")]
    DegenerateVariance { dim: usize },
    #[error("invalid chain law: {0}")]
    InvalidLaw(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `B̂`, `Ŵ` and `R̂ = √(1 + B̂/Ŵ)` for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhatComponents {
    pub b_hat: f64,
    pub w_hat: f64,
    pub r_hat: f64,
}

impl RhatComponents {
    pub fn ratio(&self) -> f64 {
        self.b_hat / self.w_hat
    }
}

/// Nested R̂ and its ingredients for one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedRhatComponents {
    pub nb_hat: f64,
    pub nw_hat: f64,
    /// Between-chain variance inside each superchain (zero when `M = 1`).
    pub tilde_b: Vec<f64>,
    /// Mean within-chain variance inside each superchain (zero when `N = 1`).
    pub tilde_w: Vec<f64>,
    pub nr_hat: f64,
}

impl NestedRhatComponents {
    /// `𝔫B̂ / 𝔫Ŵ`
    pub fn ratio(&self) -> f64 {
        self.nb_hat / self.nw_hat
    }
}

/// Classic R̂ per coordinate, treating all `K·M` chains as one flat population.
pub fn rhat(draws: &ChainDraws) -> Result<Vec<RhatComponents>, DiagnosticError> {
    let l = draws.layout();
    if l.n < 2 {
        return Err(DiagnosticError::InsufficientDraws { n: l.n });
    }
    if l.total_chains() < 2 {
        return Err(DiagnosticError::InsufficientChains {
            chains: l.total_chains(),
        });
    }
    let summary = draws.summarize();
    (0..l.d).map(|d| rhat_from_summary(&summary, d)).collect()
}

fn rhat_from_summary(s: &MomentSummary, d: usize) -> Result<RhatComponents, DiagnosticError> {
    let l = s.layout();
    let chains = l.total_chains();
    let means: Vec<f64> = (0..l.k)
        .flat_map(|k| (0..l.m).map(move |m| (k, m)))
        .map(|(k, m)| s.chain_mean(k, m, d))
        .collect();
    let b_hat = variance_about_mean(&means);
    let w_sum: KahanSum = (0..l.k)
        .flat_map(|k| (0..l.m).map(move |m| (k, m)))
        .map(|(k, m)| s.within_variance(k, m, d).expect("N >= 2 checked by caller"))
        .collect();
    let w_hat = w_sum.value() / chains as f64;
    if w_hat <= 0.0 {
        return Err(DiagnosticError::DegenerateVariance { dim: d });
    }
    Ok(RhatComponents {
        b_hat,
        w_hat,
        r_hat: ((b_hat + w_hat) / w_hat).sqrt(),
    })
}

/// Nested R̂ per coordinate.
pub fn nested_rhat(draws: &ChainDraws) -> Result<Vec<NestedRhatComponents>, DiagnosticError> {
    let summary = draws.summarize();
    (0..draws.layout().d)
        .map(|d| nested_rhat_from_summary(&summary, d))
        .collect()
}

/// Nested R̂ for one coordinate from precomputed moments.
pub fn nested_rhat_from_summary(
    s: &MomentSummary,
    d: usize,
) -> Result<NestedRhatComponents, DiagnosticError> {
    let l = *s.layout();
    if l.k < 2 {
        return Err(DiagnosticError::InsufficientSuperchains { k: l.k });
    }
    if l.m == 1 && l.n == 1 {
        return Err(DiagnosticError::NoWithinVariation);
    }
    let super_means: Vec<f64> = (0..l.k).map(|k| s.superchain_mean(k, d)).collect();
    let nb_hat = variance_about_mean(&super_means);

    let mut tilde_b = vec![0.0; l.k];
    let mut tilde_w = vec![0.0; l.k];
    for k in 0..l.k {
        if l.m > 1 {
            let center = s.superchain_mean(k, d);
            let ss: KahanSum = (0..l.m)
                .map(|m| {
                    let dev = s.chain_mean(k, m, d) - center;
                    dev * dev
                })
                .collect();
            tilde_b[k] = ss.value() / (l.m - 1) as f64;
        }
        if l.n > 1 {
            let w: KahanSum = (0..l.m)
                .map(|m| s.within_variance(k, m, d).expect("N > 1"))
                .collect();
            tilde_w[k] = w.value() / l.m as f64;
        }
    }
    let nw: KahanSum = tilde_b.iter().zip(&tilde_w).map(|(b, w)| b + w).collect();
    let nw_hat = nw.value() / l.k as f64;
    if nw_hat <= 0.0 {
        return Err(DiagnosticError::DegenerateVariance { dim: d });
    }
    Ok(NestedRhatComponents {
        nb_hat,
        nw_hat,
        nr_hat: (1.0 + nb_hat / nw_hat).sqrt(),
        tilde_b,
        tilde_w,
    })
}

/// `𝔫B̂/𝔫Ŵ` for every coordinate; the allocation-light path used by experiments.
pub fn nested_ratios(draws: &ChainDraws) -> Result<Vec<f64>, DiagnosticError> {
    Ok(nested_rhat(draws)?.iter().map(|c| c.ratio()).collect())
}

/// Sample variance with divisor `len − 1` around the compensated mean.
fn variance_about_mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<KahanSum>().value() / n;
    let ss: KahanSum = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    ss.value() / (n - 1.0)
}

/// Tolerance `τ` on the scaled nonstationary variance, for superchains of `M` subchains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub tau: f64,
    pub m: usize,
}

impl ThresholdPolicy {
    pub fn new(tau: f64, m: usize) -> Result<Self, DiagnosticError> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(DiagnosticError::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if m == 0 {
            return Err(DiagnosticError::InvalidParameter("M must be at least 1".into()));
        }
        Ok(Self { tau, m })
    }

    /// `√(1 + 1/M + τ)`
    pub fn value(&self) -> f64 {
        threshold(self.tau, self.m)
    }
}

/// Decision threshold `√(1 + 1/M + τ)` for nested R̂ computed with `N = 1`.
pub fn threshold(tau: f64, m: usize) -> f64 {
    (1.0 + 1.0 / m as f64 + tau).sqrt()
}

/// `Ŵ/B̂`, the single-chain effective sample size implied by R̂. Identical
/// chain means (`B̂ = 0`) give `f64::INFINITY`.
pub fn ess1_from_ratio(c: &RhatComponents) -> f64 {
    if c.b_hat == 0.0 {
        f64::INFINITY
    } else {
        c.w_hat / c.b_hat
    }
}
