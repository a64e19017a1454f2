use super::{BenchmarkMoments, TargetModel, LN_2PI};

/// Independent-coordinate Gaussian `N(µ, diag(σ²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    sd: Vec<f64>,
    id: String,
}

impl Gaussian {
    /// Panics if lengths differ or any `σ ≤ 0`.
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Self {
        assert_eq!(mean.len(), sd.len(), "mean and sd lengths differ");
        assert!(sd.iter().all(|&s| s > 0.0 && s.is_finite()), "sd must be positive");
        Self {
            mean,
            sd,
            id: "gaussian".into(),
        }
    }

    pub fn standard(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }
}

impl TargetModel for Gaussian {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..theta.len() {
            let var = self.sd[i] * self.sd[i];
            let dev = theta[i] - self.mean[i];
            grad[i] = -dev / var;
            lp += -0.5 * dev * dev / var - self.sd[i].ln();
        }
        lp - 0.5 * theta.len() as f64 * LN_2PI
    }

    fn analytic_moments(&self) -> Option<BenchmarkMoments> {
        Some(BenchmarkMoments::analytic(
            self.mean.clone(),
            self.sd.iter().map(|s| s * s).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn density_at_mode_and_gradient() {
        let g = Gaussian::standard(3);
        assert_relative_eq!(g.log_density(&[0.0; 3]), -1.5 * LN_2PI, epsilon = 1e-14);
        let g = Gaussian::new(vec![1.0, -2.0], vec![2.0, 0.5]);
        let mut grad = [0.0; 2];
        g.log_density_and_gradient(&[3.0, -1.0], &mut grad);
        assert_relative_eq!(grad[0], -0.5);
        assert_relative_eq!(grad[1], -4.0);
        let m = g.analytic_moments().unwrap();
        assert_eq!(m.mean, vec![1.0, -2.0]);
        assert_eq!(m.variance, vec![4.0, 0.25]);
    }
}
