//! Closed-form results for the Langevin diffusion
//! `dX_t = −(X_t − µ) dt + √2 σ dW_t` started from `X_0 ~ normal(µ₀, σ₀²)`.
//!
//! Superchains run to time `T` give the nested ratio `𝔫B/𝔫W`; single chains
//! averaged over `[0, T]` give the classical `B/W`. Both come with conditions
//! on `σ₀²` under which a small ratio certifies a small squared bias.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("W is not positive at T = {t} (denominator {denominator}); T is too small for the averaged diffusion")]
    DegenerateRegime { t: f64, denominator: f64 },
    #[error("B/W increases between T = {t0} and T = {t1}")]
    NotMonotone { t0: f64, t1: f64 },
}

/// Target `normal(µ, σ²)`, initial law `normal(µ₀, σ₀²)`, diffusion time `T`
/// and `M` subchains per superchain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LangevinSpec {
    pub mu: f64,
    pub sigma: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub t: f64,
    pub m: usize,
}

impl LangevinSpec {
    pub fn new(mu: f64, sigma: f64, mu0: f64, sigma0: f64, t: f64, m: usize) -> Result<Self, OracleError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(OracleError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !(sigma0 >= 0.0 && sigma0.is_finite()) {
            return Err(OracleError::InvalidParameter(format!("sigma0 must be non-negative, got {sigma0}")));
        }
        if !(t >= 0.0) {
            return Err(OracleError::InvalidParameter(format!("T must be non-negative, got {t}")));
        }
        if m == 0 {
            return Err(OracleError::InvalidParameter("M must be at least 1".into()));
        }
        if !mu.is_finite() || !mu0.is_finite() {
            return Err(OracleError::InvalidParameter("means must be finite".into()));
        }
        Ok(Self {
            mu,
            sigma,
            mu0,
            sigma0,
            t,
            m,
        })
    }

    pub fn with_time(self, t: f64) -> Result<Self, OracleError> {
        Self::new(self.mu, self.sigma, self.mu0, self.sigma0, t, self.m)
    }

    pub fn with_sigma0(self, sigma0: f64) -> Result<Self, OracleError> {
        Self::new(self.mu, self.sigma, self.mu0, sigma0, self.t, self.m)
    }

    /// `(µ₀ − µ)² / σ²`, the squared initial bias in units of the target variance.
    pub fn scaled_initial_bias(&self) -> f64 {
        ((self.mu0 - self.mu) / self.sigma).powi(2)
    }
}

/// Tolerances of a reliability statement: `ratio ≤ δ ⇒ bias²/σ² ≤ δ′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReliabilityQuery {
    pub delta: f64,
    pub delta_prime: f64,
}

impl ReliabilityQuery {
    pub fn new(delta: f64, delta_prime: f64) -> Result<Self, OracleError> {
        if !(delta > 0.0 && delta_prime > 0.0) || !delta.is_finite() || !delta_prime.is_finite() {
            return Err(OracleError::InvalidParameter(format!(
                "delta and delta_prime must be positive, got {delta} and {delta_prime}"
            )));
        }
        Ok(Self { delta, delta_prime })
    }
}

/// Mean and variance of `X_T` given `X_0 = x0`.
pub fn ou_transition(spec: &LangevinSpec, x0: f64) -> (f64, f64) {
    let decay = (-spec.t).exp();
    let var = -spec.sigma * spec.sigma * (-2.0 * spec.t).exp_m1();
    (spec.mu + (x0 - spec.mu) * decay, var)
}

/// `E X_T − µ` when `X_0 ~ normal(µ₀, σ₀²)`.
pub fn bias(spec: &LangevinSpec) -> f64 {
    (spec.mu0 - spec.mu) * (-spec.t).exp()
}

/// `𝔫B/𝔫W = 1/M + σ₀² / (σ² (e^{2T} − 1))`.
pub fn nested_ratio(spec: &LangevinSpec) -> f64 {
    1.0 / spec.m as f64 + nonstationary_ratio(spec)
}

/// `Var_{π₀} E(X_T | X_0) = σ₀² e^{−2T}`, which decays exactly like the squared bias.
pub fn nonstationary_variance(spec: &LangevinSpec) -> f64 {
    spec.sigma0.powi(2) * (-2.0 * spec.t).exp()
}

/// The part of [`nested_ratio`] above the `1/M` floor, `σ₀² / (σ² (e^{2T} − 1))`.
pub fn nonstationary_ratio(spec: &LangevinSpec) -> f64 {
    if spec.sigma0 == 0.0 {
        return 0.0;
    }
    spec.sigma0.powi(2) / (spec.sigma.powi(2) * (2.0 * spec.t).exp_m1())
}

/// Outcome of the `σ₀²` condition for nested R̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict", content = "sigma0_sq_bound")]
pub enum NestedReliability {
    /// The initial bias already satisfies the tolerance.
    TriviallyReliable,
    /// `δ < 1/M`: the ratio never falls below `δ`, so the implication is vacuous.
    AlwaysReliable,
    /// Reliable if and only if `σ₀²` exceeds this value.
    LowerBound(f64),
}

impl NestedReliability {
    pub fn is_reliable(&self, sigma0_sq: f64) -> bool {
        match *self {
            Self::TriviallyReliable | Self::AlwaysReliable => true,
            Self::LowerBound(b) => sigma0_sq > b,
        }
    }

    pub fn bound(&self) -> Option<f64> {
        match *self {
            Self::LowerBound(b) => Some(b),
            _ => None,
        }
    }
}

/// `σ₀² > (δ − 1/M)((µ − µ₀)²/(δ′σ²) − 1) σ²`; `spec.sigma0` and `spec.t`
/// are ignored.
pub fn reliability_sigma0_bound(spec: &LangevinSpec, query: &ReliabilityQuery) -> NestedReliability {
    if spec.scaled_initial_bias() <= query.delta_prime {
        return NestedReliability::TriviallyReliable;
    }
    let excess = query.delta - 1.0 / spec.m as f64;
    if excess < 0.0 {
        return NestedReliability::AlwaysReliable;
    }
    let s2 = spec.sigma * spec.sigma;
    NestedReliability::LowerBound(excess * (spec.scaled_initial_bias() / query.delta_prime - 1.0) * s2)
}

/// `ρ_T`, `ξ_T`, `η_T` of the time-averaged diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionShapeFns {
    pub rho: f64,
    pub xi: f64,
    pub eta: f64,
}

/// Below this time the shape functions use their Taylor expansions.
pub const SERIES_CUTOFF: f64 = 1e-4;

pub fn shape_fns(t: f64) -> DiffusionShapeFns {
    if t < SERIES_CUTOFF {
        shape_fns_series(t)
    } else {
        shape_fns_closed(t)
    }
}

pub(crate) fn shape_fns_series(t: f64) -> DiffusionShapeFns {
    let t2 = t * t;
    let t3 = t2 * t;
    DiffusionShapeFns {
        rho: 1.0 - t / 2.0 + t2 / 6.0 - t3 / 24.0,
        xi: 1.0 - t + 2.0 * t2 / 3.0 - t3 / 3.0,
        eta: 1.0 - t / 3.0 + t2 / 12.0 - t3 / 60.0,
    }
}

pub(crate) fn shape_fns_closed(t: f64) -> DiffusionShapeFns {
    let rho = -(-t).exp_m1() / t;
    DiffusionShapeFns {
        rho,
        xi: -(-2.0 * t).exp_m1() / (2.0 * t),
        eta: 2.0 * (1.0 - rho) / t,
    }
}

/// `½ T coth(T/2)`, which tends to 1 as `T → 0`.
pub fn half_t_coth(t: f64) -> f64 {
    if t < SERIES_CUTOFF {
        let t2 = t * t;
        1.0 + t2 / 12.0 - t2 * t2 / 720.0
    } else {
        0.5 * t * (2.0 + (-t).exp_m1()) / -(-t).exp_m1()
    }
}

/// Bias, `B`, `W` and `B/W` for independent chains averaged over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedDiffusion {
    pub bias: f64,
    pub b: f64,
    pub w: f64,
    pub ratio: f64,
}

pub fn rhat_ratio_averaged_diffusion(spec: &LangevinSpec) -> Result<AveragedDiffusion, OracleError> {
    if !(spec.t > 0.0) {
        return Err(OracleError::InvalidParameter("T must be positive".into()));
    }
    let f = shape_fns(spec.t);
    let s2 = spec.sigma * spec.sigma;
    let excess = spec.sigma0 * spec.sigma0 - s2;
    let gap = spec.mu0 - spec.mu;
    let b = excess * f.rho * f.rho + s2 * f.eta;
    let w = (excess + gap * gap) * (f.xi - f.rho * f.rho) + s2 * (1.0 - f.eta);
    if !(w > 0.0) {
        return Err(OracleError::DegenerateRegime { t: spec.t, denominator: w });
    }
    Ok(AveragedDiffusion {
        bias: gap * f.rho,
        b,
        w,
        ratio: b / w,
    })
}

/// Time `T*` at which the scaled squared bias `(µ − µ₀)² ρ_T² / σ²` of the
/// averaged diffusion reaches `δ′`. `None` when it starts at or below `δ′`.
pub fn bias_crossing_time(scaled_initial_bias: f64, delta_prime: f64) -> Option<f64> {
    if scaled_initial_bias <= delta_prime {
        return None;
    }
    let excess = |t: f64| scaled_initial_bias * shape_fns(t).rho.powi(2) - delta_prime;
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while excess(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // ρ_T is strictly decreasing, so the bracket holds a single root
    while hi / lo - 1.0 > 1e-12 {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest `δ` allowed by assumption A2 at `T*`: `1 / (½T* coth(T*/2) − 1)`.
pub fn a2_ceiling(t_star: f64) -> f64 {
    1.0 / (half_t_coth(t_star) - 1.0)
}

/// The `σ₀²` condition for classical R̂ at a given `T*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhatBound {
    pub t_star: f64,
    pub delta_ceiling: f64,
    /// Reliable if and only if `σ₀²` is at least this value (may be negative,
    /// in which case every `σ₀²` works).
    pub sigma0_sq_bound: f64,
    /// Every `δ` at or below this value is reliable, even with `σ₀ = 0`.
    pub always_reliable_delta: f64,
    /// Whether `B/W` was found to decrease along a `T`-grid at the bound
    /// (assumption A1).
    pub a1_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum RhatReliability {
    TriviallyReliable,
    /// `δ` is not below the A2 ceiling, so the bound does not apply.
    A2Violated { t_star: f64, delta_ceiling: f64 },
    Bound(RhatBound),
}

pub fn rhat_reliability_bound(spec: &LangevinSpec, query: &ReliabilityQuery) -> RhatReliability {
    let Some(t_star) = bias_crossing_time(spec.scaled_initial_bias(), query.delta_prime) else {
        return RhatReliability::TriviallyReliable;
    };
    let delta_ceiling = a2_ceiling(t_star);
    if query.delta >= delta_ceiling {
        return RhatReliability::A2Violated { t_star, delta_ceiling };
    }
    let f = shape_fns(t_star);
    let (d, s2, gap2) = (query.delta, spec.sigma.powi(2), (spec.mu - spec.mu0).powi(2));
    let r2 = f.rho * f.rho;
    let positive = (f.xi - r2) * gap2 + (1.0 + r2 - f.eta - f.xi) * s2;
    let negative = (f.eta - r2) * s2;
    let sigma0_sq_bound = (d * positive - negative) / ((1.0 + d) * r2 - d * f.xi);

    let probe = spec.with_sigma0(sigma0_sq_bound.max(0.0).sqrt()).expect("valid spec");
    let grid: Vec<f64> = (0..=200).map(|i| t_star * 10f64.powf(-2.0 + 4.0 * i as f64 / 200.0)).collect();
    RhatReliability::Bound(RhatBound {
        t_star,
        delta_ceiling,
        sigma0_sq_bound,
        always_reliable_delta: negative / positive,
        a1_holds: check_a1(&probe, &grid).is_ok(),
    })
}

/// Check that `B/W` of the averaged diffusion does not increase along the
/// increasing `grid` of times. Grid points in the degenerate regime are skipped.
pub fn check_a1(spec: &LangevinSpec, grid: &[f64]) -> Result<(), OracleError> {
    let mut prev: Option<(f64, f64)> = None;
    for &t in grid {
        let Ok(r) = rhat_ratio_averaged_diffusion(&spec.with_time(t)?) else {
            continue;
        };
        if let Some((t0, r0)) = prev {
            if r.ratio > r0 * (1.0 + 1e-12) {
                return Err(OracleError::NotMonotone { t0, t1: t });
            }
        }
        prev = Some((t, r.ratio));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(mu0: f64, sigma0: f64, t: f64, m: usize) -> LangevinSpec {
        LangevinSpec::new(0.0, 1.0, mu0, sigma0, t, m).unwrap()
    }

    #[test]
    fn transition_limits() {
        let s = spec(0.0, 1.0, 0.0, 1);
        assert_eq!(ou_transition(&s, 3.0), (3.0, 0.0));
        let s = LangevinSpec::new(2.0, 1.5, 0.0, 1.0, 60.0, 1).unwrap();
        let (m, v) = ou_transition(&s, -4.0);
        assert_relative_eq!(m, 2.0, epsilon = 1e-12);
        assert_relative_eq!(v, 2.25, epsilon = 1e-12);
    }

    #[test]
    fn marginal_bias_averages_the_transition_mean() {
        // the transition mean is linear in x0, so averaging over π₀ plugs in µ₀
        let s = LangevinSpec::new(1.0, 2.0, -3.0, 0.7, 0.8, 4).unwrap();
        let (m, _) = ou_transition(&s, s.mu0);
        assert_relative_eq!(m - s.mu, bias(&s), epsilon = 1e-14);
        assert_relative_eq!(bias(&s), -4.0 * (-0.8f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn nested_ratio_examples() {
        let t = 0.5 * 2f64.ln();
        assert_relative_eq!(nested_ratio(&spec(0.0, 1.0, t, 16)), 1.0625, epsilon = 1e-12);
        assert_relative_eq!(nested_ratio(&spec(0.0, 1.0, 40.0, 16)), 1.0 / 16.0, epsilon = 1e-12);
        for t in [0.01, 1.0, 5.0] {
            assert_eq!(nested_ratio(&spec(3.0, 0.0, t, 8)), 0.125);
        }
    }

    #[test]
    fn nested_reliability_examples() {
        let q = ReliabilityQuery::new(0.1, 0.02).unwrap();
        assert_eq!(reliability_sigma0_bound(&spec(0.0, 0.0, 1.0, 16), &q), NestedReliability::TriviallyReliable);
        let b = reliability_sigma0_bound(&spec(-2.0, 0.0, 1.0, 16), &q).bound().unwrap();
        assert_relative_eq!(b, (0.1 - 0.0625) * 199.0, epsilon = 1e-12);
        assert_relative_eq!(b, 7.4625, epsilon = 1e-12);
        // sigma = 2 scales the bound by σ² with the gap scaled to keep 2σ
        let s = LangevinSpec::new(1.0, 2.0, 5.0, 0.0, 1.0, 16).unwrap();
        assert_relative_eq!(reliability_sigma0_bound(&s, &q).bound().unwrap(), 4.0 * 7.4625, epsilon = 1e-12);
        let at_floor = ReliabilityQuery::new(1.0 / 16.0, 0.02).unwrap();
        assert_eq!(reliability_sigma0_bound(&spec(-2.0, 0.0, 1.0, 16), &at_floor), NestedReliability::LowerBound(0.0));
        let below = ReliabilityQuery::new(0.05, 0.02).unwrap();
        assert_eq!(reliability_sigma0_bound(&spec(-2.0, 0.0, 1.0, 16), &below), NestedReliability::AlwaysReliable);
    }

    /// Reliability checked directly: find the first time the nested ratio is
    /// at most δ and compare the scaled squared bias there with δ′.
    fn reliable_by_simulation(s: &LangevinSpec, q: &ReliabilityQuery) -> bool {
        let floor = 1.0 / s.m as f64;
        if q.delta < floor || s.scaled_initial_bias() <= q.delta_prime {
            return true;
        }
        if s.sigma0 == 0.0 {
            // ratio is exactly 1/M from the start
            return q.delta < floor;
        }
        let e2t = 1.0 + s.sigma0.powi(2) / (s.sigma.powi(2) * (q.delta - floor));
        s.scaled_initial_bias() / e2t <= q.delta_prime
    }

    proptest! {
        #[test]
        fn nested_bound_is_if_and_only_if(
            gap in -6.0f64..6.0,
            sigma0_sq in 0.0f64..40.0,
            delta in 0.07f64..0.5,
            dp in 0.005f64..0.2,
        ) {
            let s = spec(gap, sigma0_sq.sqrt(), 1.0, 16);
            let q = ReliabilityQuery::new(delta, dp).unwrap();
            let verdict = reliability_sigma0_bound(&s, &q);
            if let Some(b) = verdict.bound() {
                prop_assume!((sigma0_sq - b).abs() > 1e-9 * (1.0 + b));
            }
            prop_assert_eq!(verdict.is_reliable(sigma0_sq), reliable_by_simulation(&s, &q));
        }

        #[test]
        fn nested_ratio_is_monotone(t in 0.01f64..5.0, dt in 0.001f64..1.0, s0 in 0.01f64..3.0, ds in 0.001f64..1.0) {
            let a = spec(0.0, s0, t, 16);
            prop_assert!(nested_ratio(&a.with_time(t + dt).unwrap()) < nested_ratio(&a));
            prop_assert!(nested_ratio(&a.with_sigma0(s0 + ds).unwrap()) > nested_ratio(&a));
            prop_assert!(nested_ratio(&a) > 1.0 / 16.0);
        }

        #[test]
        fn proxy_clock_ratio_is_time_invariant(t in 0.05f64..8.0, gap in 0.1f64..5.0, s0 in 0.1f64..3.0) {
            let a = spec(gap, s0, 0.05, 16);
            let b = a.with_time(t).unwrap();
            let clock = |s: &LangevinSpec| bias(s).powi(2) / nonstationary_variance(s);
            let (ca, cb) = (clock(&a), clock(&b));
            prop_assert!((ca - cb).abs() <= 1e-12 * ca.max(cb));
            // the excess of the ratio over 1/M carries the extra factor 1/(1 − e^{−2T})
            let excess = |s: &LangevinSpec| nonstationary_ratio(s) * -(-2.0 * s.t).exp_m1();
            let (ea, eb) = (bias(&a).powi(2) / excess(&a), bias(&b).powi(2) / excess(&b));
            prop_assert!((ea - eb).abs() <= 1e-12 * ea.max(eb));
        }
    }

    #[test]
    fn shape_function_values_and_limits() {
        let f = shape_fns(1.0);
        assert_relative_eq!(f.rho, 1.0 - (-1f64).exp(), epsilon = 1e-15);
        assert!((f.rho - 0.632121).abs() < 1e-6);
        let tiny = shape_fns(1e-12);
        for v in [tiny.rho, tiny.xi, tiny.eta] {
            assert_relative_eq!(v, 1.0, epsilon = 1e-11);
        }
        for t in [1e-3, 0.1, 1.0, 10.0] {
            let f = shape_fns(t);
            assert!(f.rho > 0.0 && f.rho <= 1.0 && f.xi > 0.0 && f.xi <= 1.0 && f.eta > 0.0 && f.eta <= 1.0);
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_the_switch() {
        let (a, b) = (shape_fns_series(SERIES_CUTOFF), shape_fns_closed(SERIES_CUTOFF));
        assert_relative_eq!(a.rho, b.rho, max_relative = 1e-10);
        assert_relative_eq!(a.xi, b.xi, max_relative = 1e-10);
        assert_relative_eq!(a.eta, b.eta, max_relative = 1e-10);
    }

    #[test]
    fn xi_coth_identity() {
        for t in [1e-6, 1e-3, 0.1, 1.0, 10.0] {
            let f = shape_fns(t);
            assert_relative_eq!(f.xi, half_t_coth(t) * f.rho * f.rho, max_relative = 1e-12);
        }
    }

    /// Composite Simpson rule with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn averaged_diffusion_matches_quadrature() {
        let s = LangevinSpec::new(0.5, 1.3, -1.5, 0.6, 1.7, 1).unwrap();
        let (mu, s2, s02, gap, t) = (s.mu, s.sigma.powi(2), s.sigma0.powi(2), s.mu0 - s.mu, s.t);
        let cov = |a: f64, b: f64| (s02 - s2) * (-(a + b)).exp() + s2 * (-(a - b).abs()).exp();
        let mean = |a: f64| mu + gap * (-a).exp();
        let n = 800;
        // split the inner integral at the kink of e^{−|a−b|}
        let inner = |a: f64| simpson(|b| cov(a, b), 0.0, a, n) + simpson(|b| cov(a, b), a, t, n);
        let var_bar = simpson(inner, 0.0, t, n) / (t * t);
        let mean_bar = simpson(mean, 0.0, t, n) / t;
        let second = simpson(|a| cov(a, a) + mean(a).powi(2), 0.0, t, n) / t;
        let w = second - (var_bar + mean_bar.powi(2));

        let r = rhat_ratio_averaged_diffusion(&s).unwrap();
        assert_relative_eq!(r.b, var_bar, max_relative = 1e-6);
        assert_relative_eq!(r.w, w, max_relative = 1e-6);
        assert_relative_eq!(r.bias, mean_bar - mu, max_relative = 1e-9);
    }

    #[test]
    fn averaged_diffusion_limits() {
        let stationary = spec(0.0, 1.0, 1.0, 1);
        let r = rhat_ratio_averaged_diffusion(&stationary).unwrap();
        let f = shape_fns(1.0);
        assert_relative_eq!(r.ratio, f.eta / (1.0 - f.eta), max_relative = 1e-12);
        assert_eq!(rhat_ratio_averaged_diffusion(&stationary.with_time(10.0).unwrap()).unwrap().bias, 0.0);

        let s = spec(2.0, 1.5, 1e-3, 1);
        let r = rhat_ratio_averaged_diffusion(&s).unwrap();
        assert!((r.b - 2.25).abs() < 0.01);
        assert!(r.ratio > 100.0);
        assert!(matches!(
            rhat_ratio_averaged_diffusion(&spec(0.0, 1.0, 1e-17, 1)),
            Err(OracleError::DegenerateRegime { .. })
        ));
        assert!(rhat_ratio_averaged_diffusion(&spec(0.0, 1.0, 0.0, 1)).is_err());
    }

    #[test]
    fn crossing_time_solves_its_equation() {
        for (gap2, dp) in [(1.0, 0.5), (4.0, 0.02), (25.0, 1e-4)] {
            let t = bias_crossing_time(gap2, dp).unwrap();
            assert_relative_eq!(gap2 * shape_fns(t).rho.powi(2), dp, max_relative = 1e-10);
        }
        assert_eq!(bias_crossing_time(0.01, 0.02), None);
    }

    #[test]
    fn rhat_reliability_branches() {
        let q = ReliabilityQuery::new(0.05, 0.02).unwrap();
        assert_eq!(rhat_reliability_bound(&spec(0.1, 0.0, 1.0, 1), &q), RhatReliability::TriviallyReliable);

        let big = ReliabilityQuery::new(50.0, 0.02).unwrap();
        assert!(matches!(rhat_reliability_bound(&spec(2.0, 0.0, 1.0, 1), &big), RhatReliability::A2Violated { .. }));

        let RhatReliability::Bound(b) = rhat_reliability_bound(&spec(2.0, 0.0, 1.0, 1), &q) else {
            panic!("expected a bound")
        };
        assert!(q.delta < b.delta_ceiling);
        assert!(b.a1_holds);
        // at the bound, B/W equals δ exactly at T*
        let at = spec(2.0, b.sigma0_sq_bound.max(0.0).sqrt(), b.t_star, 1);
        if b.sigma0_sq_bound > 0.0 {
            let r = rhat_ratio_averaged_diffusion(&at).unwrap();
            assert_relative_eq!(r.ratio, q.delta, max_relative = 1e-9);
        }
    }

    #[test]
    fn always_reliable_delta_makes_the_bound_vanish() {
        let s = spec(3.0, 0.0, 1.0, 1);
        let probe = ReliabilityQuery::new(0.05, 0.02).unwrap();
        let RhatReliability::Bound(b) = rhat_reliability_bound(&s, &probe) else {
            panic!("expected a bound")
        };
        let q = ReliabilityQuery::new(b.always_reliable_delta, 0.02).unwrap();
        let RhatReliability::Bound(at) = rhat_reliability_bound(&s, &q) else {
            panic!("expected a bound")
        };
        assert!(at.sigma0_sq_bound.abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(LangevinSpec::new(0.0, 0.0, 0.0, 1.0, 1.0, 1).is_err());
        assert!(LangevinSpec::new(0.0, 1.0, 0.0, -1.0, 1.0, 1).is_err());
        assert!(LangevinSpec::new(0.0, 1.0, 0.0, 1.0, -1.0, 1).is_err());
        assert!(LangevinSpec::new(0.0, 1.0, 0.0, 1.0, 1.0, 0).is_err());
        assert!(ReliabilityQuery::new(0.0, 0.1).is_err());
    }
}
