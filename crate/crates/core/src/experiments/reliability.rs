use std::sync::Arc;

use serde::Serialize;

use super::ExperimentError;
use crate::diagnostics::nested_rhat;
use crate::langevin_oracle::{nested_ratio, reliability_sigma0_bound, LangevinSpec, NestedReliability, ReliabilityQuery};
use crate::rng::replication_seed;
use crate::samplers::{Ensemble, InitDistribution, InitScheme, Kernel, SamplerConfig};
use crate::stats::mean;
use crate::targets::{Gaussian, GaussianMixture, TargetModel};

/// One-dimensional targets of the reliability grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReliabilityTarget {
    Gaussian { mu: f64, sigma: f64 },
    /// Two unit-variance components at `±offset`, weight `weight_neg` on the
    /// negative one.
    Mixture { offset: f64, weight_neg: f64 },
}

impl ReliabilityTarget {
    pub fn standard_gaussian() -> Self {
        Self::Gaussian { mu: 0.0, sigma: 1.0 }
    }

    pub fn default_mixture() -> Self {
        Self::Mixture {
            offset: 5.0,
            weight_neg: 0.3,
        }
    }

    fn model(&self) -> Arc<dyn TargetModel> {
        match *self {
            Self::Gaussian { mu, sigma } => Arc::new(Gaussian::new(vec![mu], vec![sigma])),
            Self::Mixture { offset, weight_neg } => Arc::new(GaussianMixture::new(1, offset, weight_neg)),
        }
    }

    /// Target mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Self::Gaussian { mu, sigma } => (mu, sigma * sigma),
            Self::Mixture { offset, weight_neg } => {
                let mean = (1.0 - 2.0 * weight_neg) * offset;
                (mean, 1.0 + offset * offset - mean * mean)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Mixture { .. } => "mixture",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Reliable,
    Unreliable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Reliable => "reliable",
            Self::Unreliable => "unreliable",
        })
    }
}

/// A `(µ₀, σ₀²)` grid of MALA runs from `normal(µ₀, σ₀²)` with shared
/// superchain starts.
#[derive(Debug, Clone)]
pub struct ReliabilityPlan {
    pub target: ReliabilityTarget,
    pub mu0s: Vec<f64>,
    pub sigma0_sqs: Vec<f64>,
    pub k: usize,
    pub m: usize,
    pub step_size: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Transitions before a run that never crosses `δ` is stopped.
    pub max_steps: usize,
    /// The ratio is checked every `check_every` transitions.
    pub check_every: usize,
    /// Points with `|ln(σ₀²/bound)|` below this are exempt from the comparison.
    pub exemption_margin: f64,
    pub seed: u64,
}

impl ReliabilityPlan {
    pub fn new(target: ReliabilityTarget, mu0s: Vec<f64>, sigma0_sqs: Vec<f64>) -> Self {
        Self {
            target,
            mu0s,
            sigma0_sqs,
            k: 1024,
            m: 16,
            step_size: 0.04,
            delta: 0.1,
            delta_prime: 0.02,
            max_steps: 20_000,
            check_every: 5,
            exemption_margin: 0.5,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.k < 2 || self.m < 2 {
            return Err(ExperimentError::InvalidPlan("need K ≥ 2 and M ≥ 2".into()));
        }
        if self.check_every == 0 || self.max_steps < self.check_every {
            return Err(ExperimentError::InvalidPlan("check interval must be in 1..=max_steps".into()));
        }
        if self.sigma0_sqs.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(ExperimentError::InvalidPlan("initial variances must be finite and non-negative".into()));
        }
        if self.mu0s.iter().any(|m| !m.is_finite()) {
            return Err(ExperimentError::InvalidPlan("initial means must be finite".into()));
        }
        ReliabilityQuery::new(self.delta, self.delta_prime)?;
        Ok(())
    }

    /// Diffusion time of one transition: `h²/2` rescaled by the target variance.
    pub fn time_per_step(&self) -> f64 {
        0.5 * self.step_size * self.step_size / self.target.moments().1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityPoint {
    pub mu0: f64,
    pub sigma0_sq: f64,
    /// First checked transition count with `𝔫B̂/𝔫Ŵ ≤ δ`.
    pub crossing_step: Option<usize>,
    pub ratio_at_crossing: Option<f64>,
    /// `(θ̄ − E θ)² / Var θ` at the crossing.
    pub scaled_bias_sq: Option<f64>,
    /// Smallest ratio seen over the run.
    pub min_ratio: f64,
    pub empirical: Verdict,
    /// Closed-form verdict, for the Gaussian target only.
    pub theory: Option<Verdict>,
    pub sigma0_sq_bound: Option<f64>,
    pub exempt: bool,
}

impl ReliabilityPoint {
    /// `None` without a closed form or when exempt.
    pub fn agrees(&self) -> Option<bool> {
        match self.theory {
            Some(t) if !self.exempt => Some(t == self.empirical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReliabilitySummary {
    pub compared: usize,
    pub agreed: usize,
    pub exempt: usize,
}

impl ReliabilitySummary {
    pub fn from_points(points: &[ReliabilityPoint]) -> Self {
        let compared = points.iter().filter(|p| p.agrees().is_some()).count();
        let agreed = points.iter().filter(|p| p.agrees() == Some(true)).count();
        let exempt = points.iter().filter(|p| p.exempt).count();
        Self { compared, agreed, exempt }
    }

    /// `NaN` when nothing was compared.
    pub fn agreement(&self) -> f64 {
        self.agreed as f64 / self.compared as f64
    }
}

/// Empirical `(δ, δ′)` verdicts on the plan's grid, `µ₀` varying slowest.
/// A run is unreliable when the ratio first drops to `δ` while the scaled
/// squared bias still exceeds `δ′`; a run that never drops to `δ` before
/// `max_steps` is reliable. For the mixture, whose chains do not mix within
/// the horizon, this amounts to `𝔫R̂ ≥ √(1 + δ)` throughout.
pub fn reliability_study(plan: &ReliabilityPlan) -> Result<Vec<ReliabilityPoint>, ExperimentError> {
    plan.validate()?;
    let query = ReliabilityQuery::new(plan.delta, plan.delta_prime)?;
    let (target_mean, target_var) = plan.target.moments();
    let config = SamplerConfig::mala(plan.step_size, 0, 1);
    let kernel = Kernel::mcmc(plan.target.model(), &config)?;

    let mut points = Vec::with_capacity(plan.mu0s.len() * plan.sigma0_sqs.len());
    for (i, &mu0) in plan.mu0s.iter().enumerate() {
        for (j, &sigma0_sq) in plan.sigma0_sqs.iter().enumerate() {
            let seed = replication_seed(plan.seed, (i * plan.sigma0_sqs.len() + j) as u64);
            let init = InitDistribution::isotropic(1, mu0, sigma0_sq.sqrt())?;
            let mut ensemble = Ensemble::new(plan.k, plan.m, seed, kernel.clone(), &init, InitScheme::Superchain)?;

            let mut crossing = None;
            let mut min_ratio = f64::INFINITY;
            while ensemble.iterations() + plan.check_every <= plan.max_steps {
                ensemble.advance(plan.check_every);
                let draws = ensemble.snapshot();
                // identical subchains have no within-superchain spread yet
                let Ok(c) = nested_rhat(&draws) else { continue };
                let ratio = c[0].ratio();
                min_ratio = min_ratio.min(ratio);
                if ratio <= plan.delta {
                    let bias = mean(draws.values()) - target_mean;
                    crossing = Some((ensemble.iterations(), ratio, bias * bias / target_var));
                    break;
                }
            }

            let empirical = match crossing {
                Some((_, _, b2)) if b2 > plan.delta_prime => Verdict::Unreliable,
                _ => Verdict::Reliable,
            };
            let (theory, bound, exempt) = match plan.target {
                ReliabilityTarget::Gaussian { mu, sigma } => {
                    let spec = LangevinSpec::new(mu, sigma, mu0, 0.0, 0.0, plan.m)?;
                    let oracle = reliability_sigma0_bound(&spec, &query);
                    let theory = if oracle.is_reliable(sigma0_sq) {
                        Verdict::Reliable
                    } else {
                        Verdict::Unreliable
                    };
                    let exempt = match oracle {
                        NestedReliability::LowerBound(b) => (sigma0_sq / b).ln().abs() < plan.exemption_margin,
                        _ => false,
                    };
                    (Some(theory), oracle.bound(), exempt)
                }
                ReliabilityTarget::Mixture { .. } => (None, None, false),
            };
            points.push(ReliabilityPoint {
                mu0,
                sigma0_sq,
                crossing_step: crossing.map(|c| c.0),
                ratio_at_crossing: crossing.map(|c| c.1),
                scaled_bias_sq: crossing.map(|c| c.2),
                min_ratio,
                empirical,
                theory,
                sigma0_sq_bound: bound,
                exempt,
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheckPoint {
    /// Diffusion time actually reached, `steps · h²/2`.
    pub t: f64,
    pub steps: usize,
    pub empirical: f64,
    pub theory: f64,
    pub relative_error: f64,
}

/// Empirical `𝔫B̂/𝔫Ŵ` of MALA on `normal(0, 1)` from `normal(µ₀, σ₀²)`
/// superchain starts against the closed-form Langevin ratio, at each
/// requested diffusion time (one continuing run).
pub fn langevin_cross_check(
    k: usize,
    m: usize,
    step_size: f64,
    mu0: f64,
    sigma0: f64,
    times: &[f64],
    seed: u64,
) -> Result<Vec<CrossCheckPoint>, ExperimentError> {
    if times.windows(2).any(|w| w[0] >= w[1]) || times.iter().any(|t| !(*t > 0.0)) {
        return Err(ExperimentError::InvalidPlan("times must be positive and increasing".into()));
    }
    let target: Arc<dyn TargetModel> = Arc::new(Gaussian::standard(1));
    let kernel = Kernel::mcmc(target, &SamplerConfig::mala(step_size, 0, 1))?;
    let init = InitDistribution::isotropic(1, mu0, sigma0)?;
    let mut ensemble = Ensemble::new(k, m, seed, kernel, &init, InitScheme::Superchain)?;
    let dt = 0.5 * step_size * step_size;
    let spec = LangevinSpec::new(0.0, 1.0, mu0, sigma0, 0.0, m)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let steps = (t / dt).round() as usize;
        ensemble.advance(steps.saturating_sub(ensemble.iterations()));
        let empirical = nested_rhat(&ensemble.snapshot())?[0].ratio();
        let reached = ensemble.iterations() as f64 * dt;
        let theory = nested_ratio(&spec.with_time(reached)?);
        out.push(CrossCheckPoint {
            t: reached,
            steps: ensemble.iterations(),
            empirical,
            theory,
            relative_error: (empirical - theory).abs() / theory,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(target: ReliabilityTarget, mu0s: Vec<f64>, sigma0_sqs: Vec<f64>) -> ReliabilityPlan {
        ReliabilityPlan {
            k: 256,
            step_size: 0.1,
            max_steps: 2_000,
            seed: 5,
            ..ReliabilityPlan::new(target, mu0s, sigma0_sqs)
        }
    }

    #[test]
    fn mixture_moments_match_the_target() {
        let (mean, var) = ReliabilityTarget::default_mixture().moments();
        assert!((mean - 2.0).abs() < 1e-12 && (var - 22.0).abs() < 1e-12);
        assert_eq!(ReliabilityTarget::standard_gaussian().moments(), (0.0, 1.0));
    }

    #[test]
    fn point_start_far_away_is_unreliable_and_wide_start_is_reliable() {
        let plan = small(ReliabilityTarget::standard_gaussian(), vec![4.0], vec![0.0, 200.0]);
        let pts = reliability_study(&plan).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].empirical, Verdict::Unreliable);
        assert_eq!(pts[0].theory, Some(Verdict::Unreliable));
        assert!(pts[0].crossing_step.unwrap() <= 20);
        assert_eq!(pts[1].empirical, Verdict::Reliable);
        assert_eq!(pts[1].theory, Some(Verdict::Reliable));
        let s = ReliabilitySummary::from_points(&pts);
        assert_eq!((s.compared, s.agreed), (2, 2));
    }

    #[test]
    fn unbiased_start_is_trivially_reliable() {
        let plan = small(ReliabilityTarget::standard_gaussian(), vec![0.0], vec![0.0]);
        let p = &reliability_study(&plan).unwrap()[0];
        assert_eq!(p.theory, Some(Verdict::Reliable));
        assert_eq!(p.empirical, Verdict::Reliable);
        assert_eq!(p.sigma0_sq_bound, None);
    }

    #[test]
    fn points_near_the_bound_are_exempt() {
        // µ₀ = 2: bound (0.1 − 1/16)(4/0.02 − 1) = 7.4625
        let plan = ReliabilityPlan {
            max_steps: 10,
            ..small(ReliabilityTarget::standard_gaussian(), vec![2.0], vec![7.0, 30.0])
        };
        let pts = reliability_study(&plan).unwrap();
        assert!((pts[0].sigma0_sq_bound.unwrap() - 7.4625).abs() < 1e-12);
        assert!(pts[0].exempt && !pts[1].exempt);
    }

    #[test]
    fn mixture_has_no_closed_form() {
        let plan = ReliabilityPlan {
            max_steps: 50,
            ..small(ReliabilityTarget::default_mixture(), vec![0.0], vec![1.0])
        };
        let p = &reliability_study(&plan).unwrap()[0];
        assert_eq!(p.theory, None);
        assert_eq!(p.agrees(), None);
    }

    #[test]
    fn cross_check_tracks_the_closed_form() {
        let pts = langevin_cross_check(512, 16, 0.04, 0.0, 2.0, &[0.5, 1.0], 11).unwrap();
        assert_eq!(pts[0].steps, 625);
        for p in &pts {
            assert!(p.relative_error < 0.25, "{p:?}");
        }
        assert!(langevin_cross_check(8, 4, 0.04, 0.0, 1.0, &[1.0, 0.5], 0).is_err());
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let mut plan = small(ReliabilityTarget::standard_gaussian(), vec![1.0], vec![-1.0]);
        assert!(reliability_study(&plan).is_err());
        plan.sigma0_sqs = vec![1.0];
        plan.check_every = 0;
        assert!(reliability_study(&plan).is_err());
    }
}
