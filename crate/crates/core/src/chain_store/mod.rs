//! Storage for superchain draws and the moment summaries every estimator is
//! built from.
//!
//! Draws live in one contiguous row-major buffer indexed `(k, m, n, d)`:
//! superchain, subchain, retained iteration, coordinate. Warmup iterations are
//! never stored.

mod io;

pub use io::{read_binary, read_csv, read_draws_file, write_binary, write_csv};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::KahanSum;

#[derive(Debug, Error)]
pub enum DrawsError {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("shape mismatch: layout requires {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("non-finite draw {value} at index (k={k}, m={m}, n={n}, d={d})")]
    NonFinite {
        k: usize,
        m: usize,
        n: usize,
        d: usize,
        value: f64,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shape of a superchain run: `k` superchains of `m` subchains, each keeping
/// `n` draws of a `d`-dimensional state after `warmup` discarded iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperchainLayout {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl SuperchainLayout {
    pub fn new(k: usize, m: usize, n: usize, d: usize) -> Result<Self, DrawsError> {
        let layout = Self {
            k,
            m,
            n,
            d,
            warmup: 0,
            seed: 0,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn with_warmup(mut self, warmup: usize) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), DrawsError> {
        for (name, v) in [("K", self.k), ("M", self.m), ("N", self.n), ("D", self.d)] {
            if v == 0 {
                return Err(DrawsError::InvalidLayout(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn total_chains(&self) -> usize {
        self.k * self.m
    }

    pub fn total_values(&self) -> usize {
        self.k * self.m * self.n * self.d
    }

    /// Length of one chain's slice (`n * d`).
    pub fn chain_len(&self) -> usize {
        self.n * self.d
    }

    #[inline]
    pub fn index(&self, k: usize, m: usize, n: usize, d: usize) -> usize {
        ((k * self.m + m) * self.n + n) * self.d + d
    }

    /// Inverse of [`index`](Self::index).
    pub fn unravel(&self, mut i: usize) -> (usize, usize, usize, usize) {
        let d = i % self.d;
        i /= self.d;
        let n = i % self.n;
        i /= self.n;
        let m = i % self.m;
        (i / self.m, m, n, d)
    }
}

/// Which part of a run the stored draws come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// States recorded at the end of a warmup window (the warmup itself is discarded).
    WarmupDiscarded,
    /// Draws from the fixed-kernel sampling phase.
    Sampling,
}

/// Immutable tensor of draws `θ^(nmk)_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    layout: SuperchainLayout,
    values: Vec<f64>,
    phase: Phase,
}

/// Build a draw tensor from a flat row-major `(k, m, n, d)` sequence.
pub fn build_draws(layout: SuperchainLayout, raw: Vec<f64>) -> Result<ChainDraws, DrawsError> {
    ChainDraws::new(layout, raw)
}

impl ChainDraws {
    pub fn new(layout: SuperchainLayout, values: Vec<f64>) -> Result<Self, DrawsError> {
        layout.validate()?;
        if values.len() != layout.total_values() {
            return Err(DrawsError::ShapeMismatch {
                expected: layout.total_values(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let (k, m, n, d) = layout.unravel(i);
            return Err(DrawsError::NonFinite {
                k,
                m,
                n,
                d,
                value: values[i],
            });
        }
        Ok(Self {
            layout,
            values,
            phase: Phase::Sampling,
        })
    }

    /// Fill the tensor chain by chain. `fill(k, m, slice)` receives the
    /// disjoint `n * d` slice of chain `(k, m)`; chains are filled in parallel.
    pub fn from_chain_fn<F>(layout: SuperchainLayout, fill: F) -> Result<Self, DrawsError>
    where
        F: Fn(usize, usize, &mut [f64]) + Sync,
    {
        layout.validate()?;
        let mut values = vec![0.0; layout.total_values()];
        values
            .par_chunks_mut(layout.chain_len())
            .enumerate()
            .for_each(|(c, slice)| fill(c / layout.m, c % layout.m, slice));
        Self::new(layout, values)
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn layout(&self) -> &SuperchainLayout {
        &self.layout
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, k: usize, m: usize, n: usize, d: usize) -> f64 {
        self.values[self.layout.index(k, m, n, d)]
    }

    /// The `n * d` block of chain `(k, m)`.
    pub fn chain(&self, k: usize, m: usize) -> &[f64] {
        let len = self.layout.chain_len();
        let start = (k * self.layout.m + m) * len;
        &self.values[start..start + len]
    }

    /// Reinterpret the same chains under another `(K, M)` split. `N` and `D`
    /// must match and the total chain count must be preserved.
    pub fn reshape(&self, k: usize, m: usize) -> Result<Self, DrawsError> {
        if k * m != self.layout.total_chains() {
            return Err(DrawsError::InvalidLayout(format!(
                "cannot split {} chains as K={k} x M={m}",
                self.layout.total_chains()
            )));
        }
        let layout = SuperchainLayout { k, m, ..self.layout };
        layout.validate()?;
        Ok(Self {
            layout,
            values: self.values.clone(),
            phase: self.phase,
        })
    }

    /// Every chain as its own superchain (`K·M` superchains of one subchain).
    pub fn flatten_superchains(&self) -> Self {
        self.reshape(self.layout.total_chains(), 1)
            .expect("flattening preserves the chain count")
    }

    /// Keep only the first `keep` draws of every chain.
    pub fn truncate_draws(&self, keep: usize) -> Result<Self, DrawsError> {
        if keep == 0 || keep > self.layout.n {
            return Err(DrawsError::InvalidLayout(format!(
                "cannot keep {keep} of {} draws",
                self.layout.n
            )));
        }
        let layout = SuperchainLayout { n: keep, ..self.layout };
        let d = self.layout.d;
        let mut values = Vec::with_capacity(layout.total_values());
        for chain in self.values.chunks(self.layout.chain_len()) {
            values.extend_from_slice(&chain[..keep * d]);
        }
        Ok(Self {
            layout,
            values,
            phase: self.phase,
        })
    }

    /// The single-draw tensor made of iteration `n` of every chain.
    pub fn select_draw(&self, n: usize) -> Result<Self, DrawsError> {
        if n >= self.layout.n {
            return Err(DrawsError::InvalidLayout(format!(
                "draw {n} out of range for N={}",
                self.layout.n
            )));
        }
        let layout = SuperchainLayout { n: 1, ..self.layout };
        let d = self.layout.d;
        let values = self
            .values
            .chunks(self.layout.chain_len())
            .flat_map(|chain| chain[n * d..(n + 1) * d].iter().copied())
            .collect();
        Ok(Self {
            layout,
            values,
            phase: self.phase,
        })
    }

    pub fn summarize(&self) -> MomentSummary {
        summarize(self)
    }
}

/// Per-chain, per-superchain and grand means plus within-chain variances.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    layout: SuperchainLayout,
    chain_means: Vec<f64>,
    superchain_means: Vec<f64>,
    grand_mean: Vec<f64>,
    within_variances: Option<Vec<f64>>,
}

impl MomentSummary {
    /// `θ̄^(·mk)_d`
    pub fn chain_mean(&self, k: usize, m: usize, d: usize) -> f64 {
        self.chain_means[(k * self.layout.m + m) * self.layout.d + d]
    }

    /// `θ̄^(··k)_d`
    pub fn superchain_mean(&self, k: usize, d: usize) -> f64 {
        self.superchain_means[k * self.layout.d + d]
    }

    /// `θ̄^(···)_d`
    pub fn grand_mean(&self, d: usize) -> f64 {
        self.grand_mean[d]
    }

    pub fn grand_means(&self) -> &[f64] {
        &self.grand_mean
    }

    /// Within-chain variance (divisor `N − 1`); `None` when `N = 1`.
    pub fn within_variance(&self, k: usize, m: usize, d: usize) -> Option<f64> {
        self.within_variances
            .as_ref()
            .map(|w| w[(k * self.layout.m + m) * self.layout.d + d])
    }

    pub fn has_within_variance(&self) -> bool {
        self.within_variances.is_some()
    }

    pub fn layout(&self) -> &SuperchainLayout {
        &self.layout
    }
}

/// Compute all moment summaries with compensated accumulation in a fixed order.
pub fn summarize(draws: &ChainDraws) -> MomentSummary {
    let layout = *draws.layout();
    let SuperchainLayout { k, m, n, d, .. } = layout;

    let mut chain_means = vec![0.0; k * m * d];
    let mut within = if n > 1 { Some(vec![0.0; k * m * d]) } else { None };

    for (c, chain) in draws.values.chunks(layout.chain_len()).enumerate() {
        for dim in 0..d {
            let mut acc = KahanSum::new();
            for it in 0..n {
                acc.add(chain[it * d + dim]);
            }
            let mu = acc.value() / n as f64;
            chain_means[c * d + dim] = mu;
            if let Some(w) = within.as_mut() {
                let mut ss = KahanSum::new();
                for it in 0..n {
                    let dev = chain[it * d + dim] - mu;
                    ss.add(dev * dev);
                }
                w[c * d + dim] = ss.value() / (n - 1) as f64;
            }
        }
    }

    let mut superchain_means = vec![0.0; k * d];
    for kk in 0..k {
        for dim in 0..d {
            let acc: KahanSum = (0..m).map(|mm| chain_means[(kk * m + mm) * d + dim]).collect();
            superchain_means[kk * d + dim] = acc.value() / m as f64;
        }
    }

    let grand_mean = (0..d)
        .map(|dim| {
            let acc: KahanSum = (0..k).map(|kk| superchain_means[kk * d + dim]).collect();
            acc.value() / k as f64
        })
        .collect();

    MomentSummary {
        layout,
        chain_means,
        superchain_means,
        grand_mean,
        within_variances: within,
    }
}
