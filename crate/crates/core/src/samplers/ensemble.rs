use std::sync::Arc;

use rayon::prelude::*;

use super::kernel::ChainState;
use super::{InitDistribution, InitScheme, SamplerConfig, SamplerError, SamplerKind};
use crate::chain_store::{ChainDraws, SuperchainLayout};
use crate::rng::{stream, Domain};
use crate::targets::TargetModel;

/// The transition shared by every chain of an ensemble.
#[derive(Clone)]
pub enum Kernel {
    Mcmc {
        target: Arc<dyn TargetModel>,
        kind: SamplerKind,
        step_size: f64,
        leapfrog: usize,
    },
    /// Exact Gaussian AR(1) with stationary law `normal(mu, sigma²)`.
    Ar1 { mu: Vec<f64>, phi: f64, sigma: Vec<f64> },
}

impl Kernel {
    pub fn mcmc(target: Arc<dyn TargetModel>, config: &SamplerConfig) -> Result<Self, SamplerError> {
        config.validate()?;
        Ok(Self::Mcmc {
            target,
            kind: config.kind,
            step_size: config.step_size,
            leapfrog: config.leapfrog,
        })
    }

    pub fn ar1(mu: Vec<f64>, phi: f64, sigma: Vec<f64>) -> Result<Self, SamplerError> {
        if !(phi.abs() < 1.0) {
            return Err(SamplerError::InvalidConfig(format!("AR(1) coefficient must satisfy |φ| < 1, got {phi}")));
        }
        if mu.len() != sigma.len() {
            return Err(SamplerError::DimensionMismatch {
                what: "AR(1) scale",
                expected: mu.len(),
                actual: sigma.len(),
            });
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(SamplerError::InvalidConfig("AR(1) scales must be positive".into()));
        }
        Ok(Self::Ar1 { mu, phi, sigma })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Mcmc { target, .. } => target.dim(),
            Self::Ar1 { mu, .. } => mu.len(),
        }
    }

    fn step(&self, chain: &mut ChainState) {
        match self {
            Self::Mcmc {
                target,
                kind: SamplerKind::Mala,
                step_size,
                ..
            } => chain.mala(target.as_ref(), *step_size),
            Self::Mcmc {
                target,
                kind: SamplerKind::Hmc,
                step_size,
                leapfrog,
            } => chain.hmc(target.as_ref(), *step_size, *leapfrog),
            Self::Ar1 { mu, phi, sigma } => chain.ar1(mu, *phi, sigma),
        }
    }
}

/// `K × M` chains evolved in lockstep. The state after `ℓ` transitions is
/// independent of thread count: chain `(k, m)` only ever reads its own stream.
#[derive(Clone)]
pub struct Ensemble {
    k: usize,
    m: usize,
    seed: u64,
    kernel: Kernel,
    chains: Vec<ChainState>,
    iterations: usize,
}

impl Ensemble {
    pub fn new(
        k: usize,
        m: usize,
        seed: u64,
        kernel: Kernel,
        init: &InitDistribution,
        scheme: InitScheme,
    ) -> Result<Self, SamplerError> {
        if k == 0 || m == 0 {
            return Err(SamplerError::InvalidConfig("K and M must be at least 1".into()));
        }
        let d = kernel.dim();
        init.check_dim(d)?;

        let mut starts = vec![0.0; k * m * d];
        match scheme {
            InitScheme::Superchain => {
                for kk in 0..k {
                    let mut rng = stream(seed, Domain::SharedInit, kk, 0);
                    let (first, rest) = starts[kk * m * d..(kk + 1) * m * d].split_at_mut(d);
                    init.draw(&mut rng, kk, first);
                    for chunk in rest.chunks_exact_mut(d) {
                        chunk.copy_from_slice(first);
                    }
                }
            }
            InitScheme::Independent => {
                for (c, chunk) in starts.chunks_exact_mut(d).enumerate() {
                    let mut rng = stream(seed, Domain::IndependentInit, c / m, c % m);
                    init.draw(&mut rng, c, chunk);
                }
            }
        }

        let chains = starts
            .par_chunks_exact(d)
            .enumerate()
            .map(|(c, x0)| {
                let (kk, mm) = (c / m, c % m);
                let mut grad = vec![0.0; d];
                let lp = match &kernel {
                    Kernel::Mcmc { target, .. } => target.log_density_and_gradient(x0, &mut grad),
                    Kernel::Ar1 { .. } => 0.0,
                };
                if !lp.is_finite() || x0.iter().any(|v| !v.is_finite()) {
                    return Err(SamplerError::NonFiniteInit { k: kk, m: mm, log_density: lp });
                }
                Ok(ChainState::new(x0.to_vec(), grad, lp, stream(seed, Domain::Chain, kk, mm)))
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            k,
            m,
            seed,
            kernel,
            chains,
            iterations: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Transitions applied so far.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn advance(&mut self, steps: usize) {
        if steps == 0 {
            return;
        }
        let kernel = &self.kernel;
        self.chains.par_iter_mut().for_each(|c| {
            for _ in 0..steps {
                kernel.step(c);
            }
        });
        self.iterations += steps;
    }

    /// Current states as a tensor with `N = 1`; `warmup` records the
    /// transitions applied so far.
    pub fn snapshot(&self) -> ChainDraws {
        let layout = self.layout(1);
        let values = self.chains.iter().flat_map(|c| c.x.iter().copied()).collect();
        ChainDraws::new(layout, values).expect("chain states stay finite")
    }

    /// Apply `n` further transitions, keeping every resulting state.
    pub fn sample(&mut self, n: usize) -> Result<ChainDraws, SamplerError> {
        let layout = self.layout(n);
        layout.validate()?;
        let d = self.dim();
        let mut values = vec![0.0; layout.total_values()];
        let kernel = &self.kernel;
        values
            .par_chunks_mut(n * d)
            .zip(self.chains.par_iter_mut())
            .for_each(|(out, c)| {
                for row in out.chunks_exact_mut(d) {
                    kernel.step(c);
                    row.copy_from_slice(&c.x);
                }
            });
        self.iterations += n;
        Ok(ChainDraws::new(layout, values)?)
    }

    /// Acceptance rate of every chain since the last reset, in `(k, m)` order.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.chains.iter().map(ChainState::acceptance_rate).collect()
    }

    pub fn reset_acceptance(&mut self) {
        for c in &mut self.chains {
            c.accepted = 0;
            c.proposed = 0;
        }
    }

    fn layout(&self, n: usize) -> SuperchainLayout {
        SuperchainLayout {
            k: self.k,
            m: self.m,
            n,
            d: self.dim(),
            warmup: self.iterations,
            seed: self.seed,
        }
    }
}
