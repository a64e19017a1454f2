use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{nested_rhat_from_summary, threshold, DiagnosticError, ThresholdPolicy};
use crate::chain_store::{ChainDraws, SuperchainLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dim: usize,
    #[serde(rename = "nB")]
    pub nb: f64,
    #[serde(rename = "nW")]
    pub nw: f64,
    #[serde(rename = "nRhat")]
    pub nrhat: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Per-coordinate nested R̂ verdicts against `√(1 + 1/M + τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub layout: SuperchainLayout,
    pub tau: f64,
    /// Number of single-iteration slices averaged (1 when `N = 1` or `M = 1`).
    pub averaged_iterations: usize,
    pub dimensions: Vec<DimensionReport>,
}

impl DiagnosticReport {
    pub fn converged(&self) -> bool {
        self.dimensions.iter().all(|d| d.pass)
    }

    pub fn max_nrhat(&self) -> f64 {
        self.dimensions.iter().map(|d| d.nrhat).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dim,nB,nW,nRhat,threshold,pass")?;
        for d in &self.dimensions {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{}",
                d.dim, d.nb, d.nw, d.nrhat, d.threshold, d.pass
            )?;
        }
        out.flush()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

/// Run the threshold rule on every coordinate.
///
/// The threshold assumes nested R̂ is computed from one draw per chain. With
/// `N > 1` the statistic is evaluated on each iteration's single-draw slice and
/// the `N` values (and their `𝔫B̂`, `𝔫Ŵ`) are averaged with equal weights.
pub fn diagnose(draws: &ChainDraws, tau: f64) -> Result<DiagnosticReport, DiagnosticError> {
    let policy = ThresholdPolicy::new(tau, draws.layout().m)?;
    let layout = *draws.layout();
    let cut = threshold(policy.tau, policy.m);
    // With one subchain per superchain a single-draw slice has no spread, so
    // the full draws are used instead (nested R̂ is then the classic R̂).
    let slices: Vec<ChainDraws> = if layout.m == 1 {
        vec![draws.clone()]
    } else {
        (0..layout.n)
            .map(|n| draws.select_draw(n).expect("iteration index is in range"))
            .collect()
    };
    let mut acc = vec![(0.0, 0.0, 0.0); layout.d];
    for slice in &slices {
        let summary = slice.summarize();
        for (d, slot) in acc.iter_mut().enumerate() {
            let c = nested_rhat_from_summary(&summary, d)?;
            slot.0 += c.nb_hat;
            slot.1 += c.nw_hat;
            slot.2 += c.nr_hat;
        }
    }
    let scale = slices.len() as f64;
    let dimensions = acc
        .into_iter()
        .enumerate()
        .map(|(dim, (nb, nw, nr))| {
            let nrhat = nr / scale;
            DimensionReport {
                dim,
                nb: nb / scale,
                nw: nw / scale,
                nrhat,
                threshold: cut,
                pass: nrhat <= cut,
            }
        })
        .collect();
    Ok(DiagnosticReport {
        layout,
        tau,
        averaged_iterations: slices.len(),
        dimensions,
    })
}
