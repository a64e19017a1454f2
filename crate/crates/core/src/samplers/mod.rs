//! MALA and static HMC over superchains.
//!
//! Chain `(k, m)` draws its transition noise from its own stream keyed by
//! `(seed, k, m)` and consumes it sequentially, so results never depend on how
//! chains are scheduled across threads.

mod ensemble;
mod init;
mod kernel;
mod tuning;

pub use ensemble::{Ensemble, Kernel};
pub use init::{InitDistribution, InitHook, InitScheme};
pub use tuning::{default_tuning, Tuning};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::chain_store::{ChainDraws, DrawsError, SuperchainLayout};
use crate::config::{ConfigError, KeyValueConfig};
use crate::targets::{TargetError, TargetModel};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("{what} has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("chain ({k}, {m}) starts where the log-density is not finite ({log_density})")]
    NonFiniteInit { k: usize, m: usize, log_density: f64 },
    #[error(transparent)]
    Draws(#[from] DrawsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Target(#[from] TargetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Mala,
    Hmc,
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mala" => Ok(Self::Mala),
            "hmc" => Ok(Self::Hmc),
            other => Err(format!("expected `mala` or `hmc`, found `{other}`")),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mala => "mala",
            Self::Hmc => "hmc",
        })
    }
}

/// Fixed tuning of one run. `leapfrog` is ignored by MALA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub step_size: f64,
    pub leapfrog: usize,
    pub warmup: usize,
    pub sampling: usize,
}

impl SamplerConfig {
    pub fn mala(step_size: f64, warmup: usize, sampling: usize) -> Self {
        Self {
            kind: SamplerKind::Mala,
            step_size,
            leapfrog: 1,
            warmup,
            sampling,
        }
    }

    pub fn hmc(step_size: f64, leapfrog: usize, warmup: usize, sampling: usize) -> Self {
        Self {
            kind: SamplerKind::Hmc,
            step_size,
            leapfrog,
            warmup,
            sampling,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(SamplerError::InvalidConfig(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if self.kind == SamplerKind::Hmc && self.leapfrog == 0 {
            return Err(SamplerError::InvalidConfig("leapfrog must be at least 1".into()));
        }
        if self.sampling == 0 {
            return Err(SamplerError::InvalidConfig("N must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything needed to reproduce one sampling run.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub target: String,
    pub layout: SuperchainLayout,
    pub config: SamplerConfig,
    pub init: InitDistribution,
    pub scheme: InitScheme,
}

/// Keys understood by [`RunPlan::from_config`].
pub const PLAN_KEYS: &[&str] = &[
    "target",
    "K",
    "M",
    "N",
    "warmup",
    "seed",
    "sampler",
    "step_size",
    "leapfrog",
    "init.mu0",
    "init.sigma0",
    "init.scheme",
];

impl RunPlan {
    pub fn validate(&self, dim: usize) -> Result<(), SamplerError> {
        self.layout.validate()?;
        self.config.validate()?;
        if self.layout.d != dim {
            return Err(SamplerError::DimensionMismatch {
                what: "layout",
                expected: dim,
                actual: self.layout.d,
            });
        }
        if self.layout.warmup != self.config.warmup || self.layout.n != self.config.sampling {
            return Err(SamplerError::InvalidConfig(format!(
                "layout (warmup {}, N {}) disagrees with sampler (warmup {}, sampling {})",
                self.layout.warmup, self.layout.n, self.config.warmup, self.config.sampling
            )));
        }
        self.init.check_dim(dim)
    }

    /// Build a plan from flat `key=value` settings for a target of dimension
    /// `dim`. Tuning keys not given fall back to [`default_tuning`].
    pub fn from_config(cfg: &KeyValueConfig, dim: usize) -> Result<Self, SamplerError> {
        let target: String = cfg.require("target")?;
        let tuning = default_tuning(&target);
        let k = cfg.require("K")?;
        let m = cfg.require("M")?;
        let n = cfg.parse_or("N", 1)?;
        let warmup = cfg.parse_or("warmup", 0)?;
        let seed = cfg.parse_or("seed", 0u64)?;
        let kind = cfg.parse_or("sampler", tuning.kind)?;
        let step_size = cfg.parse_or("step_size", tuning.step_size)?;
        let leapfrog = match kind {
            SamplerKind::Mala => 1,
            SamplerKind::Hmc => cfg.parse_or("leapfrog", tuning.leapfrog)?,
        };
        let broadcast = |key: &str, default: f64| -> Result<Vec<f64>, SamplerError> {
            match cfg.parse_list::<f64>(key)? {
                None => Ok(vec![default; dim]),
                Some(v) if v.len() == 1 => Ok(vec![v[0]; dim]),
                Some(v) if v.len() == dim => Ok(v),
                Some(v) => Err(SamplerError::DimensionMismatch {
                    what: "init list",
                    expected: dim,
                    actual: v.len(),
                }),
            }
        };
        let init = InitDistribution::gaussian(
            broadcast("init.mu0", tuning.init_mu0)?,
            broadcast("init.sigma0", tuning.init_sigma0)?,
        )?;
        let scheme = cfg.parse_or("init.scheme", InitScheme::Superchain)?;
        let layout = SuperchainLayout::new(k, m, n, dim)?.with_warmup(warmup).with_seed(seed);
        let config = SamplerConfig {
            kind,
            step_size,
            leapfrog,
            warmup,
            sampling: n,
        };
        let plan = Self {
            target,
            layout,
            config,
            init,
            scheme,
        };
        plan.validate(dim)?;
        Ok(plan)
    }

    /// Fully resolved settings, suitable for writing next to the draws.
    pub fn to_config(&self) -> KeyValueConfig {
        let mut cfg = KeyValueConfig::new();
        let l = &self.layout;
        cfg.set("target", &self.target);
        cfg.set("K", l.k.to_string());
        cfg.set("M", l.m.to_string());
        cfg.set("N", l.n.to_string());
        cfg.set("warmup", l.warmup.to_string());
        cfg.set("seed", l.seed.to_string());
        cfg.set("sampler", self.config.kind.to_string());
        cfg.set("step_size", self.config.step_size.to_string());
        cfg.set("leapfrog", self.config.leapfrog.to_string());
        cfg.set("init.scheme", self.scheme.to_string());
        if let InitDistribution::Gaussian { mu0, sigma0 } = &self.init {
            let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            cfg.set("init.mu0", join(mu0));
            cfg.set("init.sigma0", join(sigma0));
        }
        cfg
    }
}

/// Sampling-phase draws plus per-chain acceptance statistics.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub draws: ChainDraws,
    /// Acceptance rate of every chain over the sampling phase.
    pub acceptance: Vec<f64>,
    /// Acceptance rate of every chain over warmup (`NaN` when warmup is 0).
    pub warmup_acceptance: Vec<f64>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn mean_acceptance(&self) -> f64 {
        self.acceptance.iter().sum::<f64>() / self.acceptance.len() as f64
    }
}

/// Run warmup then the sampling phase; only the sampling draws are kept.
pub fn run(plan: &RunPlan, target: Arc<dyn TargetModel>) -> Result<RunOutput, SamplerError> {
    plan.validate(target.dim())?;
    let kernel = Kernel::mcmc(target, &plan.config)?;
    let l = &plan.layout;
    let mut ensemble = Ensemble::new(l.k, l.m, l.seed, kernel, &plan.init, plan.scheme)?;
    ensemble.advance(plan.config.warmup);
    let warmup_acceptance = ensemble.acceptance_rates();
    ensemble.reset_acceptance();
    let draws = ensemble.sample(plan.config.sampling)?;
    let acceptance = ensemble.acceptance_rates();

    let mut warnings = Vec::new();
    let stuck = warmup_acceptance.iter().filter(|&&a| a == 0.0).count();
    if stuck > 0 {
        warnings.push(format!(
            "{stuck} of {} chains accepted no proposal during warmup; the step size is likely too large",
            warmup_acceptance.len()
        ));
    }
    Ok(RunOutput {
        draws,
        acceptance,
        warmup_acceptance,
        warnings,
    })
}

/// Chains following `X ← φX + √(1−φ²)σξ` exactly in every coordinate of
/// `layout`, after `layout.warmup` transitions from `init`.
pub fn exact_gaussian_chain(
    phi: f64,
    sigma: f64,
    layout: SuperchainLayout,
    init: &InitDistribution,
    scheme: InitScheme,
) -> Result<ChainDraws, SamplerError> {
    layout.validate()?;
    let kernel = Kernel::ar1(vec![0.0; layout.d], phi, vec![sigma; layout.d])?;
    let mut ensemble = Ensemble::new(layout.k, layout.m, layout.seed, kernel, init, scheme)?;
    ensemble.advance(layout.warmup);
    ensemble.sample(layout.n)
}
