//! Population values of the variance components, for chains whose joint law
//! over the `N` retained draws is Gaussian with known mean and covariance.

use nalgebra::{DMatrix, SymmetricEigen};

use super::DiagnosticError;
use crate::stats::KahanSum;

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;

/// Joint law of one chain's `N` draws: means `µ_n` and covariance `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLaw {
    mean: Vec<f64>,
    cov: DMatrix<f64>,
}

impl ChainLaw {
    /// `cov` is row-major `N × N`.
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self, DiagnosticError> {
        let n = mean.len();
        if cov.len() != n * n {
            return Err(DiagnosticError::InvalidLaw(format!(
                "covariance has {} entries, expected {}",
                cov.len(),
                n * n
            )));
        }
        if mean.iter().chain(&cov).any(|v| !v.is_finite()) {
            return Err(DiagnosticError::InvalidLaw("non-finite entry".into()));
        }
        let cov = DMatrix::from_row_slice(n, n, &cov);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(DiagnosticError::InvalidLaw(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if n > 0 {
            let min_eig = SymmetricEigen::new(cov.clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -EIGEN_TOL {
                return Err(DiagnosticError::InvalidLaw(format!(
                    "covariance not positive semidefinite (eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self { mean, cov })
    }

    /// Stationary zero-mean AR(1) law: `Σ_ij = φ^|i−j| σ²`.
    pub fn ar1(n: usize, phi: f64, sigma: f64) -> Result<Self, DiagnosticError> {
        if !(phi.abs() < 1.0) {
            return Err(DiagnosticError::InvalidLaw(format!("|phi| must be < 1, got {phi}")));
        }
        let s2 = sigma * sigma;
        let cov = (0..n * n)
            .map(|idx| {
                let lag = (idx / n).abs_diff(idx % n) as i32;
                phi.powi(lag) * s2
            })
            .collect();
        Self::new(vec![0.0; n], cov)
    }

    /// Replace the mean path, keeping the covariance.
    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self, DiagnosticError> {
        if mean.len() != self.mean.len() {
            return Err(DiagnosticError::InvalidLaw("mean length differs from N".into()));
        }
        self.mean = mean;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// `Var θ̄ = 1ᵀΣ1 / N²`
    pub fn mean_variance(&self) -> f64 {
        let n = self.len() as f64;
        self.cov.iter().copied().collect::<KahanSum>().value() / (n * n)
    }

    /// Single-chain effective sample size `Var θ / Var θ̄`, with `Var θ` the
    /// average marginal variance (exact for stationary laws).
    pub fn ess1(&self) -> f64 {
        let marginal = self.cov.diagonal().iter().copied().collect::<KahanSum>().value()
            / self.len() as f64;
        marginal / self.mean_variance()
    }
}

/// Infinite-chain limits `(B, W)` of `B̂` and `Ŵ` for chains drawn from `law`.
pub fn bw_limits_from_chain_law(law: &ChainLaw) -> Result<(f64, f64), DiagnosticError> {
    let n = law.len();
    if n < 2 {
        return Err(DiagnosticError::InsufficientDraws { n });
    }
    let b = law.mean_variance();
    let mean_bar = law.mean.iter().copied().collect::<KahanSum>().value() / n as f64;
    let w: KahanSum = (0..n)
        .map(|i| (law.cov[(i, i)] - b) + (law.mean[i] * law.mean[i] - mean_bar * mean_bar))
        .collect();
    Ok((b, w.value() / (n - 1) as f64))
}

/// Law of one superchain's sample mean, split as in the variance decomposition
/// over the shared initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperchainLaw {
    /// `Var_{π₀} E_γ(θ̄ | θ₀)`
    pub nonstationary: f64,
    /// `E_{π₀} Var_γ(θ̄ | θ₀)` for a single subchain
    pub persistent: f64,
    /// Expected within-chain variance `W′` when `N > 1`; `None` for `N = 1`.
    /// For a Gaussian chain law this is the `W` of [`bw_limits_from_chain_law`].
    pub within: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedLimits {
    pub nb: f64,
    pub nw: f64,
}

impl NestedLimits {
    pub fn ratio(&self) -> f64 {
        self.nb / self.nw
    }
}

/// Infinite-superchain limits of `𝔫B̂` and `𝔫Ŵ` for superchains of `m` subchains.
pub fn nested_limits_from_superchain_law(
    law: &SuperchainLaw,
    m: usize,
) -> Result<NestedLimits, DiagnosticError> {
    let within = law.within.unwrap_or(0.0);
    for (name, v) in [
        ("nonstationary", law.nonstationary),
        ("persistent", law.persistent),
        ("within", within),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(DiagnosticError::InvalidLaw(format!("{name} variance must be finite and >= 0, got {v}")));
        }
    }
    if m == 0 {
        return Err(DiagnosticError::InvalidParameter("M must be at least 1".into()));
    }
    Ok(NestedLimits {
        nb: law.nonstationary + law.persistent / m as f64,
        nw: law.persistent + within,
    })
}
