use super::{BenchmarkMoments, TargetModel, LN_2PI};

/// Two-component mixture `w·N(−µ·1, I) + (1 − w)·N(µ·1, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    offset: f64,
    weight_neg: f64,
}

impl GaussianMixture {
    pub fn new(dim: usize, offset: f64, weight_neg: f64) -> Self {
        assert!(dim > 0 && (0.0..1.0).contains(&weight_neg) && weight_neg > 0.0);
        Self {
            dim,
            offset,
            weight_neg,
        }
    }

    /// 100 dimensions, components at ±5, weights 0.3 / 0.7.
    pub fn bimodal() -> Self {
        Self::new(100, 5.0, 0.3)
    }
}

impl TargetModel for GaussianMixture {
    fn id(&self) -> &str {
        "mixture"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mu = self.offset;
        let (mut sq_neg, mut sq_pos) = (0.0, 0.0);
        for &x in theta {
            sq_neg += (x + mu) * (x + mu);
            sq_pos += (x - mu) * (x - mu);
        }
        let a = self.weight_neg.ln() - 0.5 * sq_neg;
        let b = (1.0 - self.weight_neg).ln() - 0.5 * sq_pos;
        let top = a.max(b);
        let lse = top + ((a - top).exp() + (b - top).exp()).ln();
        let r_neg = (a - lse).exp();
        let r_pos = (b - lse).exp();
        for (g, &x) in grad.iter_mut().zip(theta) {
            *g = -r_neg * (x + mu) - r_pos * (x - mu);
        }
        lse - 0.5 * self.dim as f64 * LN_2PI
    }

    fn analytic_moments(&self) -> Option<BenchmarkMoments> {
        let w = self.weight_neg;
        let mu = self.offset;
        let mean = (1.0 - 2.0 * w) * mu;
        // Σ wᵢ(σᵢ² + µᵢ²) − mean²
        let var = 1.0 + mu * mu - mean * mean;
        Some(BenchmarkMoments::analytic(vec![mean; self.dim], vec![var; self.dim]))
    }
}
