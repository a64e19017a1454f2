//! Generators for the simulated datasets bundled under `data/`.
//!
//! The files are produced once by `cargo run --example generate_data` and
//! checked in; a unit test regenerates them and compares byte for byte.

use std::fmt::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::german_credit::FEATURES;
use super::item_response::DELTA_PRIOR_MEAN;
use super::pharmacokinetics::{masses_at, DOSE_MASS, DOSE_TIMES, HYPER_PRIORS, SAMPLE_OFFSETS};
use super::sigmoid;
use crate::rng::{stream, Domain};

pub const PK_SEED: u64 = 20_230_611;
pub const PK_PATIENTS: usize = 20;
pub const IRT_SEED: u64 = 20_230_612;
pub const IRT_STUDENTS: usize = 400;
pub const IRT_QUESTIONS: usize = 100;
pub const GERMAN_SEED: u64 = 20_230_613;
pub const GERMAN_ROWS: usize = 1000;

/// `pk_sim.csv`: hyperparameters and patient effects drawn from the prior,
/// concentrations `m_cent · exp(σ ε)` at every sampling time.
pub fn pk_sim_csv(seed: u64) -> String {
    let mut rng = stream(seed, Domain::Data, 0, 0);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let hyper: Vec<f64> = HYPER_PRIORS.iter().map(|&(loc, scale)| loc + scale * normal()).collect();
    let (s1, s2, sigma) = (hyper[2].exp(), hyper[3].exp(), hyper[4].exp());
    let eta1: Vec<f64> = (0..PK_PATIENTS).map(|_| normal()).collect();
    let eta2: Vec<f64> = (0..PK_PATIENTS).map(|_| normal()).collect();

    let mut times = Vec::new();
    let mut events = Vec::new();
    for (e, &td) in DOSE_TIMES.iter().enumerate() {
        for &dt in &SAMPLE_OFFSETS {
            times.push(td + dt);
            events.push(e);
        }
    }
    let mut out = String::from("patient,time,dose_event,concentration\n");
    let mut masses = Vec::new();
    for n in 0..PK_PATIENTS {
        let k1 = (hyper[0] + eta1[n] * s1).exp();
        let k2 = (hyper[1] + eta2[n] * s2).exp();
        masses_at(k1, k2, &DOSE_TIMES, DOSE_MASS, &times, &mut masses);
        for ((t, e), m) in times.iter().zip(&events).zip(&masses) {
            let y = m.cent * (sigma * normal()).exp();
            writeln!(out, "{n},{t:.3},{e},{y:.9e}").unwrap();
        }
    }
    out
}

/// `irt_sim.csv`: abilities, difficulties and offset drawn from the prior.
pub fn irt_sim_csv(seed: u64) -> String {
    let mut rng = stream(seed, Domain::Data, 1, 0);
    let delta = DELTA_PRIOR_MEAN + rng.sample::<f64, _>(StandardNormal);
    let alpha: Vec<f64> = (0..IRT_STUDENTS).map(|_| rng.sample(StandardNormal)).collect();
    let beta: Vec<f64> = (0..IRT_QUESTIONS).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = String::from("student,question,response\n");
    for (j, a) in alpha.iter().enumerate() {
        for (l, b) in beta.iter().enumerate() {
            let p = sigmoid(a - b + delta);
            let y = u8::from(rng.random::<f64>() < p);
            writeln!(out, "{j},{l},{y}").unwrap();
        }
    }
    out
}

/// A stand-in for `german.data-numeric`: integer-coded features with varying
/// numbers of levels, labels in `{1, 2}` from a logistic model.
pub fn german_credit_synthetic(seed: u64) -> String {
    let mut rng = stream(seed, Domain::Data, 2, 0);
    let levels: Vec<u32> = (0..FEATURES).map(|j| 2 + (j as u32 * 7) % 9).collect();
    let weights: Vec<f64> = (0..=FEATURES)
        .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut out = String::new();
    for _ in 0..GERMAN_ROWS {
        let row: Vec<u32> = levels.iter().map(|&k| rng.random_range(1..=k)).collect();
        let mut s = weights[0];
        for (j, (&x, &k)) in row.iter().zip(&levels).enumerate() {
            // roughly centred and scaled like the standardized design
            let z = (f64::from(x) - 0.5 * f64::from(k + 1)) / (f64::from(k) / 12f64.sqrt()).max(0.5);
            s += weights[j + 1] * z;
        }
        let label = if rng.random::<f64>() < sigmoid(s) { 2 } else { 1 };
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>4}")).collect();
        writeln!(out, "{} {label:>4}", cells.join("")).unwrap();
    }
    out
}
