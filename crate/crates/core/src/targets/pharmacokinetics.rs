//! One-compartment pharmacokinetic model with first-order gut absorption and
//! repeated oral doses, fitted hierarchically across patients.

use super::{normal_logpdf, TargetError, TargetModel, LN_2PI};

const BUNDLED: &str = include_str!("../../data/pk_sim.csv");

/// Drug mass added to the gut at each dosing event.
pub const DOSE_MASS: f64 = 1000.0;
/// Dosing events (hours).
pub const DOSE_TIMES: [f64; 3] = [0.0, 12.0, 24.0];
/// Measurement offsets after every dose (hours).
pub const SAMPLE_OFFSETS: [f64; 12] = [0.083, 0.167, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];

/// Prior location/scale of the log of `k₁pop`, `k₂pop`, `σ₁`, `σ₂`, `σ`.
pub(crate) const HYPER_PRIORS: [(f64, f64); 5] = [
    (0.0, 0.1),
    (-1.203_972_804_325_936, 0.1), // log 0.3
    (-1.897_119_984_885_881, 0.1), // log 0.15
    (-1.049_822_124_498_678, 0.1), // log 0.35
    (-1.0, 1.0),
];

/// Observations for one patient, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct PkPatient {
    pub times: Vec<f64>,
    pub concentrations: Vec<f64>,
}

/// Compartment masses `(m_gut, m_cent)` and their derivatives with respect to
/// `k₁` and `k₂` (`∂m_gut/∂k₂` is identically zero).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Masses {
    pub gut: f64,
    pub cent: f64,
    pub gut_k1: f64,
    pub cent_k1: f64,
    pub cent_k2: f64,
}

/// `ψ(a, b, τ) = (e^{−aτ} − e^{−bτ})/(b − a)` and its partials in `a` and `b`.
///
/// Near `a = b` it is evaluated as `τ e^{−k̄τ} S(x)` with `k̄ = (a+b)/2`,
/// `x = (b−a)τ/2` and `S(x) = sinh(x)/x` from its Taylor series, which also
/// gives the exact limit `τ e^{−aτ}` at `a = b`.
pub(crate) fn psi(a: f64, b: f64, tau: f64) -> (f64, f64, f64) {
    let x = 0.5 * (b - a) * tau;
    if x.abs() < 0.5 {
        let (s, ds) = sinhc_series(x);
        let e = (-0.5 * (a + b) * tau).exp();
        let half_sq = 0.5 * tau * tau * e;
        (tau * e * s, -half_sq * (s + ds), -half_sq * (s - ds))
    } else {
        let ea = (-a * tau).exp();
        let eb = (-b * tau).exp();
        let diff = b - a;
        let p = (ea - eb) / diff;
        (p, (p - tau * ea) / diff, (tau * eb - p) / diff)
    }
}

/// `S(x) = sinh(x)/x` and `S′(x)` for `|x| < 0.5`.
fn sinhc_series(x: f64) -> (f64, f64) {
    let x2 = x * x;
    let mut term = 1.0; // x^{2j}/(2j+1)!
    let mut s = 1.0;
    let mut ds = 0.0;
    for j in 1..12 {
        let jf = j as f64;
        // x^{2j−1}·2j/(2j+1)! from the previous term x^{2j−2}/(2j−1)!
        ds += term * x * 2.0 * jf / ((2.0 * jf) * (2.0 * jf + 1.0));
        term *= x2 / ((2.0 * jf) * (2.0 * jf + 1.0));
        s += term;
    }
    (s, ds)
}

/// Evolve the masses for `tau` hours with no dosing in between.
pub(crate) fn evolve(m: &Masses, k1: f64, k2: f64, tau: f64) -> Masses {
    let e1 = (-k1 * tau).exp();
    let e2 = (-k2 * tau).exp();
    let (p, p_a, p_b) = psi(k1, k2, tau);
    Masses {
        gut: m.gut * e1,
        gut_k1: m.gut_k1 * e1 - tau * m.gut * e1,
        cent: m.cent * e2 + m.gut * k1 * p,
        cent_k1: m.cent_k1 * e2 + m.gut_k1 * k1 * p + m.gut * p + m.gut * k1 * p_a,
        cent_k2: m.cent_k2 * e2 - tau * m.cent * e2 + m.gut * k1 * p_b,
    }
}

/// Masses at each (ascending) time in `times`, given doses of `dose` at `dose_times`.
pub(crate) fn masses_at(k1: f64, k2: f64, dose_times: &[f64], dose: f64, times: &[f64], out: &mut Vec<Masses>) {
    out.clear();
    let mut state = Masses::default();
    let mut state_time = f64::NEG_INFINITY;
    let mut next_dose = 0;
    for &t in times {
        while next_dose < dose_times.len() && dose_times[next_dose] <= t {
            let td = dose_times[next_dose];
            if state_time.is_finite() {
                state = evolve(&state, k1, k2, td - state_time);
            }
            state.gut += dose;
            state_time = td;
            next_dose += 1;
        }
        if state_time.is_finite() {
            out.push(evolve(&state, k1, k2, t - state_time));
        } else {
            out.push(Masses::default());
        }
    }
}

/// Hierarchical posterior over `(log k₁pop, log k₂pop, log σ₁, log σ₂, log σ,
/// η₁¹…η₁ᴾ, η₂¹…η₂ᴾ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pharmacokinetics {
    patients: Vec<PkPatient>,
}

impl Pharmacokinetics {
    pub fn new(patients: Vec<PkPatient>) -> Self {
        Self { patients }
    }

    /// Simulated 20-patient dataset shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED, "pk_sim.csv").expect("bundled data parses")
    }

    /// CSV with header `patient,time,dose_event,concentration`.
    pub fn from_csv(text: &str, origin: &str) -> Result<Self, TargetError> {
        let mut patients: Vec<PkPatient> = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TargetError::Ingest {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad("expected `patient,time,dose_event,concentration`".into()));
            }
            let patient: usize = f[0].parse().map_err(|_| bad(format!("bad patient `{}`", f[0])))?;
            let time: f64 = f[1].parse().map_err(|_| bad(format!("bad time `{}`", f[1])))?;
            let conc: f64 = f[3].parse().map_err(|_| bad(format!("bad concentration `{}`", f[3])))?;
            if !(conc > 0.0) {
                return Err(bad("concentration must be positive".into()));
            }
            if patient >= patients.len() {
                patients.resize(patient + 1, PkPatient { times: vec![], concentrations: vec![] });
            }
            let p = &mut patients[patient];
            if p.times.last().is_some_and(|&last| time <= last) {
                return Err(bad("times must increase within a patient".into()));
            }
            p.times.push(time);
            p.concentrations.push(conc);
        }
        Ok(Self::new(patients))
    }

    pub fn patients(&self) -> &[PkPatient] {
        &self.patients
    }
}

impl TargetModel for Pharmacokinetics {
    fn id(&self) -> &str {
        "pharmacokinetics"
    }

    fn dim(&self) -> usize {
        5 + 2 * self.patients.len()
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.patients.len();
        grad.fill(0.0);
        let mut lp = 0.0;
        for (i, &(loc, scale)) in HYPER_PRIORS.iter().enumerate() {
            lp += normal_logpdf(theta[i], loc, scale);
            grad[i] = -(theta[i] - loc) / (scale * scale);
        }
        for i in 5..5 + 2 * p {
            lp += normal_logpdf(theta[i], 0.0, 1.0);
            grad[i] = -theta[i];
        }

        let (lk1, lk2) = (theta[0], theta[1]);
        let s1 = theta[2].exp();
        let s2 = theta[3].exp();
        let log_sigma = theta[4];
        let inv_var = (-2.0 * log_sigma).exp();
        let mut masses = Vec::new();
        for (n, patient) in self.patients.iter().enumerate() {
            let (e1, e2) = (theta[5 + n], theta[5 + p + n]);
            let k1 = (lk1 + e1 * s1).exp();
            let k2 = (lk2 + e2 * s2).exp();
            masses_at(k1, k2, &DOSE_TIMES, DOSE_MASS, &patient.times, &mut masses);
            let (mut dk1, mut dk2) = (0.0, 0.0);
            for (m, &y) in masses.iter().zip(&patient.concentrations) {
                let ly = y.ln();
                let z = ly - m.cent.ln();
                lp += -ly - log_sigma - 0.5 * LN_2PI - 0.5 * z * z * inv_var;
                grad[4] += -1.0 + z * z * inv_var;
                let dlc = z * inv_var / m.cent;
                dk1 += dlc * m.cent_k1;
                dk2 += dlc * m.cent_k2;
            }
            // k = exp(log kpop + η s), s = exp(log s)
            let (g1, g2) = (dk1 * k1, dk2 * k2);
            grad[0] += g1;
            grad[1] += g2;
            grad[2] += g1 * e1 * s1;
            grad[3] += g2 * e2 * s2;
            grad[5 + n] += g1 * s1;
            grad[5 + p + n] += g2 * s2;
        }
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::finite_difference_error;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn single(k1: f64, k2: f64, t: f64) -> Masses {
        let mut out = Vec::new();
        masses_at(k1, k2, &DOSE_TIMES, DOSE_MASS, &[t], &mut out);
        out[0]
    }

    #[test]
    fn initial_condition_and_gut_decay() {
        let m = single(1.3, 0.4, 0.0);
        assert_eq!(m.cent, 0.0);
        assert_eq!(m.gut, DOSE_MASS);
        for t in [0.083, 1.0, 8.0] {
            assert_relative_eq!(single(1.3, 0.4, t).gut, DOSE_MASS * (-1.3 * t).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn central_mass_solves_the_ode() {
        let (k1, k2) = (0.9, 0.35);
        for t in [0.3, 2.0, 7.5, 13.0, 20.0, 30.0] {
            let h = 1e-4;
            let up = single(k1, k2, t + h).cent;
            let down = single(k1, k2, t - h).cent;
            let deriv = (up - down) / (2.0 * h);
            let m = single(k1, k2, t);
            let rhs = k1 * m.gut - k2 * m.cent;
            assert_relative_eq!(deriv, rhs, max_relative = 1e-6);
        }
    }

    #[test]
    fn equal_rates_use_the_limit() {
        let (p, _, _) = psi(0.7, 0.7, 3.0);
        assert_relative_eq!(p, 3.0 * (-2.1f64).exp(), max_relative = 1e-15);
        // approach from both sides and across the series/direct switch
        for delta in [1e-12, 1e-9, 1e-6, 1e-3, 0.2, 0.4] {
            let (p1, a1, b1) = psi(0.7, 0.7 + delta, 3.0);
            let (p0, a0, b0) = direct_psi(0.7, 0.7 + delta, 3.0);
            if delta >= 1e-3 {
                assert_relative_eq!(p1, p0, max_relative = 1e-10);
                assert_relative_eq!(a1, a0, max_relative = 1e-7);
                assert_relative_eq!(b1, b0, max_relative = 1e-7);
            }
            assert!(p1.is_finite() && a1.is_finite() && b1.is_finite());
        }
        // continuity at the switch x = 0.5
        let tau = 2.0;
        let below = psi(1.0, 1.0 + 0.999_999 / tau * 2.0 * 0.5, tau);
        let above = psi(1.0, 1.0 + 1.000_001 / tau * 2.0 * 0.5, tau);
        assert_relative_eq!(below.0, above.0, max_relative = 1e-5);
        assert_relative_eq!(below.1, above.1, max_relative = 1e-5);
    }

    fn direct_psi(a: f64, b: f64, tau: f64) -> (f64, f64, f64) {
        let ea = (-a * tau).exp();
        let eb = (-b * tau).exp();
        let p = (ea - eb) / (b - a);
        (p, (p - tau * ea) / (b - a), (tau * eb - p) / (b - a))
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let (k1, k2) = (1.1, 0.3);
        for t in [0.5, 12.5, 31.0] {
            let m = single(k1, k2, t);
            let h = 1e-6;
            let d1 = (single(k1 + h, k2, t).cent - single(k1 - h, k2, t).cent) / (2.0 * h);
            let d2 = (single(k1, k2 + h, t).cent - single(k1, k2 - h, t).cent) / (2.0 * h);
            assert_relative_eq!(m.cent_k1, d1, max_relative = 1e-6);
            assert_relative_eq!(m.cent_k2, d2, max_relative = 1e-6);
        }
    }

    #[test]
    fn bundled_dataset_shape() {
        let t = Pharmacokinetics::bundled();
        assert_eq!(t.patients().len(), 20);
        assert_eq!(t.dim(), 45);
        for p in t.patients() {
            assert_eq!(p.times.len(), DOSE_TIMES.len() * SAMPLE_OFFSETS.len());
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = Pharmacokinetics::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let coords: Vec<usize> = (0..45).collect();
        for _ in 0..100 {
            let mut theta: Vec<f64> = (0..45).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            for (i, &(loc, scale)) in HYPER_PRIORS.iter().enumerate() {
                theta[i] = loc + scale * rng.sample::<f64, _>(StandardNormal);
            }
            let err = finite_difference_error(&t, &theta, &coords);
            assert!(err < 1e-5, "{err}");
        }
    }
}
