use std::fs;
use std::path::PathBuf;

use clap::Args;
use superchain::chain_store::read_draws_file;
use superchain::diagnose;

use crate::{exit, CliError, Result};

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Draw file (`.csv`, otherwise the binary format).
    pub draws: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub tau: f64,
    /// Regroup the chains as `K,M` superchains.
    #[arg(long, value_name = "K,M")]
    pub layout: Option<String>,
    /// Directory for `report.json` and `report.csv` (default: next to the draws).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_layout(raw: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("--layout expects K,M with positive integers, got `{raw}`"));
    let (k, m) = raw.split_once(',').ok_or_else(bad)?;
    let k = k.trim().parse().map_err(|_| bad())?;
    let m = m.trim().parse().map_err(|_| bad())?;
    Ok((k, m))
}

pub fn run(a: DiagnoseArgs) -> Result<u8> {
    let mut draws = read_draws_file(&a.draws)?;
    if let Some(raw) = &a.layout {
        let (k, m) = parse_layout(raw)?;
        draws = draws.reshape(k, m)?;
    }
    let report = diagnose(&draws, a.tau)?;

    let dir = a.out.clone().unwrap_or_else(|| {
        a.draws
            .parent()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("report.json"), report.to_json() + "\n")?;
    report.write_csv(fs::File::create(dir.join("report.csv"))?)?;

    let l = report.layout;
    let threshold = report.dimensions.first().map_or(f64::NAN, |d| d.threshold);
    let failing = report.dimensions.iter().filter(|d| !d.pass).count();
    println!(
        "K={} M={} N={} D={}: max nRhat {:.6}, threshold {:.6} (tau {}), {} of {} dimensions above",
        l.k,
        l.m,
        l.n,
        l.d,
        report.max_nrhat(),
        threshold,
        a.tau,
        failing,
        l.d
    );
    if report.converged() {
        println!("converged");
        Ok(exit::OK)
    } else {
        println!("not converged");
        Ok(exit::NOT_CONVERGED)
    }
}
