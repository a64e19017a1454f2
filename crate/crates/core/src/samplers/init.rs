use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SamplerError;

/// User-supplied initializer: fills the slice with one starting point.
pub type InitHook = Arc<dyn Fn(&mut ChaCha8Rng, &mut [f64]) + Send + Sync>;

/// The starting distribution `π₀`.
#[derive(Clone)]
pub enum InitDistribution {
    /// Independent normals with per-coordinate mean and scale.
    Gaussian { mu0: Vec<f64>, sigma0: Vec<f64> },
    /// Deterministic points, used cyclically (superchain `k` takes point
    /// `k mod len`; under independent initialization chain `(k, m)` takes
    /// `(kM + m) mod len`).
    FixedPoints(Vec<Vec<f64>>),
    Custom(InitHook),
}

impl fmt::Debug for InitDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { mu0, sigma0 } => f
                .debug_struct("Gaussian")
                .field("mu0", mu0)
                .field("sigma0", sigma0)
                .finish(),
            Self::FixedPoints(p) => f.debug_tuple("FixedPoints").field(&p.len()).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl InitDistribution {
    pub fn gaussian(mu0: Vec<f64>, sigma0: Vec<f64>) -> Result<Self, SamplerError> {
        if mu0.len() != sigma0.len() {
            return Err(SamplerError::DimensionMismatch {
                what: "init.sigma0",
                expected: mu0.len(),
                actual: sigma0.len(),
            });
        }
        if sigma0.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) || mu0.iter().any(|m| !m.is_finite()) {
            return Err(SamplerError::InvalidConfig(
                "initial means must be finite and scales finite and non-negative".into(),
            ));
        }
        Ok(Self::Gaussian { mu0, sigma0 })
    }

    /// `normal(µ₀, σ₀²)` in every coordinate.
    pub fn isotropic(dim: usize, mu0: f64, sigma0: f64) -> Result<Self, SamplerError> {
        Self::gaussian(vec![mu0; dim], vec![sigma0; dim])
    }

    pub fn point(x: Vec<f64>) -> Self {
        Self::FixedPoints(vec![x])
    }

    pub fn custom(hook: impl Fn(&mut ChaCha8Rng, &mut [f64]) + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(hook))
    }

    /// Dimension implied by the distribution, when it has one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Gaussian { mu0, .. } => Some(mu0.len()),
            Self::FixedPoints(p) => p.first().map(Vec::len),
            Self::Custom(_) => None,
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<(), SamplerError> {
        if let Self::FixedPoints(points) = self {
            if points.is_empty() {
                return Err(SamplerError::InvalidConfig("no fixed initial points given".into()));
            }
            if let Some(p) = points.iter().find(|p| p.len() != dim) {
                return Err(SamplerError::DimensionMismatch {
                    what: "initial point",
                    expected: dim,
                    actual: p.len(),
                });
            }
        }
        match self.dim() {
            Some(d) if d != dim => Err(SamplerError::DimensionMismatch {
                what: "initial distribution",
                expected: dim,
                actual: d,
            }),
            _ => Ok(()),
        }
    }

    /// Draw the starting point with index `slot` into `out`.
    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, slot: usize, out: &mut [f64]) {
        match self {
            Self::Gaussian { mu0, sigma0 } => {
                for ((x, m), s) in out.iter_mut().zip(mu0).zip(sigma0) {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = m + s * z;
                }
            }
            Self::FixedPoints(points) => out.copy_from_slice(&points[slot % points.len()]),
            Self::Custom(hook) => hook(rng, out),
        }
    }
}

/// How starting points are shared between chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitScheme {
    /// One `θ₀ᵏ ~ π₀` per superchain, shared by its `M` subchains.
    #[default]
    Superchain,
    /// Every chain draws its own starting point ("naive" superchains).
    Independent,
}

impl std::str::FromStr for InitScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "superchain" | "shared" => Ok(Self::Superchain),
            "independent" | "naive" => Ok(Self::Independent),
            other => Err(format!("expected `superchain` or `independent`, found `{other}`")),
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Superchain => "superchain",
            Self::Independent => "independent",
        })
    }
}
