use super::SamplerKind;

/// Fixed sampler settings and starting distribution `normal(µ₀, σ₀²)` used
/// for a target when a run does not override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub kind: SamplerKind,
    pub step_size: f64,
    pub leapfrog: usize,
    pub init_mu0: f64,
    pub init_sigma0: f64,
}

const fn hmc(step_size: f64, leapfrog: usize, init_mu0: f64, init_sigma0: f64) -> Tuning {
    Tuning {
        kind: SamplerKind::Hmc,
        step_size,
        leapfrog,
        init_mu0,
        init_sigma0,
    }
}

/// Settings picked by a coarse grid search over step size and trajectory
/// length per target (see `configs/` for the recorded values).
pub fn default_tuning(target: &str) -> Tuning {
    match target {
        "rosenbrock" => hmc(0.25, 4, 0.0, 1.0),
        "mixture" | "bimodal" => hmc(0.3, 8, 0.0, 1.0),
        "eight_schools" => hmc(0.4, 8, 0.0, 1.0),
        "german_credit" | "german_credit_synthetic" => hmc(0.07, 12, 0.0, 1.0),
        // wider starts leave some chains stuck in the tails of the likelihood
        "pharmacokinetics" | "pk" => hmc(0.01, 32, 0.0, 0.3),
        "item_response" | "irt" => hmc(0.015, 20, 0.0, 1.0),
        _ => hmc(0.5, 4, 0.0, 2.0),
    }
}
