use super::{BenchmarkMoments, TargetModel, LN_2PI};

/// `θ₁ ~ N(0, 1)`, `θ₂ | θ₁ ~ N(0.03(θ₁ − 100), 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

const SLOPE: f64 = 0.03;
const SHIFT: f64 = 100.0;

impl TargetModel for Rosenbrock {
    fn id(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (x, y) = (theta[0], theta[1]);
        let r = y - SLOPE * (x - SHIFT);
        grad[0] = -x + SLOPE * r;
        grad[1] = -r;
        -0.5 * x * x - 0.5 * r * r - LN_2PI
    }

    /// Both coordinates are Gaussian: `θ₂` has mean `−3` and variance `1 + 0.03²`.
    fn analytic_moments(&self) -> Option<BenchmarkMoments> {
        Some(BenchmarkMoments::analytic(
            vec![0.0, -SLOPE * SHIFT],
            vec![1.0, 1.0 + SLOPE * SLOPE],
        ))
    }
}
