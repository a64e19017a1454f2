use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{Map, Value};
use superchain::samplers::{run as run_plan, RunPlan, PLAN_KEYS};
use superchain::targets::load_target;

use crate::bundle::{config_json, Bundle};
use crate::settings::{flag, resolve};
use crate::{exit, CliError, Result};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrawFormat {
    Csv,
    Binary,
    Both,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Flat `key=value` config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `hmc` or `mala`.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long = "step_size", alias = "step-size")]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub leapfrog: Option<usize>,
    /// Initial mean: one value or one per coordinate, comma separated.
    #[arg(long = "init.mu0", alias = "init-mu0", allow_hyphen_values = true)]
    pub init_mu0: Option<String>,
    #[arg(long = "init.sigma0", alias = "init-sigma0")]
    pub init_sigma0: Option<String>,
    /// `superchain` (shared starts) or `independent`.
    #[arg(long = "init.scheme", alias = "init-scheme")]
    pub init_scheme: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: DrawFormat,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

pub fn run(a: SampleArgs) -> Result<u8> {
    let cfg = resolve(
        a.config.as_deref(),
        &[],
        &[
            flag("target", &a.target),
            flag("K", &a.k),
            flag("M", &a.m),
            flag("N", &a.n),
            flag("warmup", &a.warmup),
            flag("seed", &a.seed),
            flag("sampler", &a.sampler),
            flag("step_size", &a.step_size),
            flag("leapfrog", &a.leapfrog),
            flag("init.mu0", &a.init_mu0),
            flag("init.sigma0", &a.init_sigma0),
            flag("init.scheme", &a.init_scheme),
        ],
        PLAN_KEYS,
    )?;
    let id = cfg
        .get("target")
        .ok_or_else(|| CliError::Usage("missing required key `target`".into()))?
        .to_string();
    let target = load_target(&id, a.data_dir.as_deref())?;
    let plan = RunPlan::from_config(&cfg, target.dim())?;
    let output = run_plan(&plan, target)?;

    let mut bundle = Bundle::create(&a.out)?;
    if matches!(a.format, DrawFormat::Csv | DrawFormat::Both) {
        output.draws.write_csv_file(&bundle.path("draws.csv"))?;
        bundle.record("draws.csv");
    }
    if matches!(a.format, DrawFormat::Binary | DrawFormat::Both) {
        output.draws.write_binary_file(&bundle.path("draws.bin"))?;
        bundle.record("draws.bin");
    }
    let l = plan.layout;
    let mut acc = String::from("k,m,warmup_acceptance,acceptance\n");
    for (c, (w, s)) in output.warmup_acceptance.iter().zip(&output.acceptance).enumerate() {
        acc.push_str(&format!("{},{},{w:?},{s:?}\n", c / l.m, c % l.m));
    }
    bundle.write("acceptance.csv", acc)?;

    let warmup_mean = mean_finite(&output.warmup_acceptance);
    let mut meta = Map::new();
    meta.insert("command".into(), Value::from("sample"));
    meta.insert("config".into(), config_json(&plan.to_config()));
    meta.insert("seed".into(), Value::from(l.seed));
    meta.insert("dim".into(), Value::from(l.d));
    meta.insert("mean_acceptance".into(), Value::from(output.mean_acceptance()));
    meta.insert("mean_warmup_acceptance".into(), Value::from(warmup_mean));
    meta.insert("warnings".into(), Value::from(output.warnings.clone()));
    bundle.finish(meta)?;

    println!(
        "{id}: K={} M={} N={} D={} after {} warmup iterations",
        l.k, l.m, l.n, l.d, l.warmup
    );
    let warm = warmup_mean.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    println!("mean acceptance: warmup {warm}, sampling {:.3}", output.mean_acceptance());
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", a.out.display());
    Ok(exit::OK)
}

/// Mean over finite entries; `null` in JSON when there are none.
fn mean_finite(v: &[f64]) -> Option<f64> {
    let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
}
