use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use superchain::experiments::compute_benchmark;
use superchain::targets::{default_data_dir, load_target, save_cached_benchmark, OracleConfig, TARGET_IDS};

use crate::{exit, Result};

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Targets to compute (default: every registered target without closed-form moments).
    #[arg(long, value_delimiter = ',')]
    pub target: Vec<String>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long = "step_size", alias = "step-size")]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub leapfrog: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Recompute even when a target has closed-form moments.
    #[arg(long)]
    pub force: bool,
    /// Directory receiving `benchmarks/<target>.json`.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

pub fn run(a: BenchmarkArgs) -> Result<u8> {
    let dir = a.data_dir.clone().unwrap_or_else(default_data_dir);
    let ids: Vec<String> = if a.target.is_empty() {
        // `german_credit` needs the external dataset, so it is only computed on request
        TARGET_IDS
            .iter()
            .filter(|id| **id != "german_credit")
            .map(|s| s.to_string())
            .collect()
    } else {
        a.target.clone()
    };
    for id in ids {
        let target = load_target(&id, Some(&dir))?;
        if target.analytic_moments().is_some() && !a.force {
            println!("{id}: closed-form moments, skipped");
            continue;
        }
        let mut config = OracleConfig::for_target(&id);
        config.chains = a.chains.unwrap_or(config.chains);
        config.draws = a.draws.unwrap_or(config.draws);
        config.warmup = a.warmup.unwrap_or(config.warmup);
        config.step_size = a.step_size.unwrap_or(config.step_size);
        config.leapfrog = a.leapfrog.unwrap_or(config.leapfrog);
        config.seed = a.seed;
        let start = Instant::now();
        let cache = compute_benchmark(target, &config)?;
        let path = save_cached_benchmark(&dir, &cache)?;
        println!(
            "{id}: {} chains × {} draws, acceptance {:.3}, min ESS {:.0}, {:.1}s → {}",
            config.chains,
            cache.config.draws,
            cache.acceptance_rate,
            cache.min_ess,
            start.elapsed().as_secs_f64(),
            path.display()
        );
    }
    Ok(exit::OK)
}
