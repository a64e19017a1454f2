//! Single-chain transitions. Every transition consumes exactly `D` standard
//! normals followed by one uniform, whatever the outcome.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::targets::TargetModel;

/// State and scratch buffers of one chain.
#[derive(Debug, Clone)]
pub(crate) struct ChainState {
    pub x: Vec<f64>,
    pub grad: Vec<f64>,
    pub lp: f64,
    pub rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
    p: Vec<f64>,
    x_new: Vec<f64>,
    g_new: Vec<f64>,
}

impl ChainState {
    pub fn new(x: Vec<f64>, grad: Vec<f64>, lp: f64, rng: ChaCha8Rng) -> Self {
        let d = x.len();
        Self {
            x,
            grad,
            lp,
            rng,
            accepted: 0,
            proposed: 0,
            p: vec![0.0; d],
            x_new: vec![0.0; d],
            g_new: vec![0.0; d],
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn metropolis(&mut self, lp_new: f64, kinetic_old: f64, kinetic_new: f64) {
        let u: f64 = self.rng.random();
        let log_alpha = (lp_new - kinetic_new) - (self.lp - kinetic_old);
        let finite = lp_new.is_finite() && self.x_new.iter().all(|v| v.is_finite());
        self.proposed += 1;
        if finite && u.ln() < log_alpha {
            std::mem::swap(&mut self.x, &mut self.x_new);
            std::mem::swap(&mut self.grad, &mut self.g_new);
            self.lp = lp_new;
            self.accepted += 1;
        }
    }

    /// Static HMC with identity mass matrix and `leapfrog` steps of size `h`.
    pub fn hmc(&mut self, target: &dyn TargetModel, h: f64, leapfrog: usize) {
        let half = 0.5 * h;
        let mut kinetic_old = 0.0;
        for i in 0..self.x.len() {
            let xi: f64 = self.rng.sample(StandardNormal);
            kinetic_old += xi * xi;
            self.p[i] = xi + half * self.grad[i];
            self.x_new[i] = self.x[i];
        }
        let mut lp_new = f64::NAN;
        for step in 0..leapfrog {
            for i in 0..self.x.len() {
                self.x_new[i] += h * self.p[i];
            }
            lp_new = target.log_density_and_gradient(&self.x_new, &mut self.g_new);
            let scale = if step + 1 < leapfrog { h } else { half };
            for i in 0..self.x.len() {
                self.p[i] += scale * self.g_new[i];
            }
            if !lp_new.is_finite() {
                break;
            }
        }
        let mut kinetic_new = 0.0;
        for p in &self.p {
            kinetic_new += p * p;
        }
        self.metropolis(lp_new, 0.5 * kinetic_old, 0.5 * kinetic_new);
    }

    /// MALA written as a Langevin proposal `x + h²/2 ∇log π(x) + h ξ`; the
    /// arithmetic is ordered so that it coincides bit for bit with
    /// [`ChainState::hmc`] at one leapfrog step.
    pub fn mala(&mut self, target: &dyn TargetModel, h: f64) {
        let half = 0.5 * h;
        let mut kinetic_old = 0.0;
        for i in 0..self.x.len() {
            let xi: f64 = self.rng.sample(StandardNormal);
            kinetic_old += xi * xi;
            let drift = xi + half * self.grad[i];
            self.p[i] = drift;
            self.x_new[i] = self.x[i] + h * drift;
        }
        let lp_new = target.log_density_and_gradient(&self.x_new, &mut self.g_new);
        let mut kinetic_new = 0.0;
        for i in 0..self.x.len() {
            let p = self.p[i] + half * self.g_new[i];
            kinetic_new += p * p;
        }
        self.metropolis(lp_new, 0.5 * kinetic_old, 0.5 * kinetic_new);
    }

    /// Exact Gaussian autoregression `x ← µ + φ(x − µ) + √(1−φ²) σ ξ`.
    pub fn ar1(&mut self, mu: &[f64], phi: f64, sigma: &[f64]) {
        let c = (1.0 - phi * phi).sqrt();
        for i in 0..self.x.len() {
            let xi: f64 = self.rng.sample(StandardNormal);
            self.x[i] = mu[i] + phi * (self.x[i] - mu[i]) + c * sigma[i] * xi;
        }
        let _: f64 = self.rng.random();
        self.proposed += 1;
        self.accepted += 1;
    }
}
