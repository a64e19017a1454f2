use clap::Args;
use superchain::langevin_oracle::{
    bias, nested_ratio, reliability_sigma0_bound, rhat_ratio_averaged_diffusion, rhat_reliability_bound,
    LangevinSpec, NestedReliability, ReliabilityQuery, RhatReliability,
};

use crate::{exit, CliError, Result};

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Target mean.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Target standard deviation.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: f64,
    /// Initial mean; a comma-separated list is accepted with `--reliability`.
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: String,
    /// Initial standard deviation.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma0: Option<f64>,
    /// Subchains per superchain.
    #[arg(long = "M")]
    pub m: usize,
    /// Diffusion times, comma separated.
    #[arg(long = "T", conflicts_with = "t_grid")]
    pub t: Option<String>,
    /// Log-spaced grid `LO:HI:COUNT`.
    #[arg(long = "T-grid", value_name = "LO:HI:COUNT")]
    pub t_grid: Option<String>,
    /// Emit `mu0,sigma0_sq_bound,verdict` instead of the T grid.
    #[arg(long, requires_all = ["delta", "delta_prime"])]
    pub reliability: bool,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "delta-prime")]
    pub delta_prime: Option<f64>,
    /// With `--reliability`, bound classical R̂ instead of nested R̂.
    #[arg(long, requires = "reliability")]
    pub rhat: bool,
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a number")))
        })
        .collect()
}

fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("--T-grid expects LO:HI:COUNT with 0 < LO < HI, got `{raw}`"));
    let parts: Vec<&str> = raw.split(':').collect();
    let [lo, hi, count] = parts[..] else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(bad());
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

pub fn run(a: OracleArgs) -> Result<u8> {
    let mu0s = parse_list(&a.mu0, "--mu0")?;
    let sigma0 = a.sigma0.unwrap_or(0.0);
    let base = LangevinSpec::new(a.mu, a.sigma, mu0s[0], sigma0, 0.0, a.m)?;

    if a.reliability {
        let query = ReliabilityQuery::new(a.delta.unwrap_or_default(), a.delta_prime.unwrap_or_default())?;
        println!("mu0,sigma0_sq_bound,verdict");
        for &mu0 in &mu0s {
            let spec = LangevinSpec { mu0, ..base };
            let (bound, verdict) = if a.rhat {
                match rhat_reliability_bound(&spec, &query) {
                    RhatReliability::TriviallyReliable => (None, "trivially-reliable".to_string()),
                    RhatReliability::A2Violated { .. } => (None, "a2-violated".to_string()),
                    RhatReliability::Bound(b) => (Some(b.sigma0_sq_bound), verdict_for(a.sigma0, b.sigma0_sq_bound, "bound")),
                }
            } else {
                match reliability_sigma0_bound(&spec, &query) {
                    NestedReliability::TriviallyReliable => (None, "trivially-reliable".to_string()),
                    NestedReliability::AlwaysReliable => (None, "always-reliable".to_string()),
                    NestedReliability::LowerBound(b) => (Some(b), verdict_for(a.sigma0, b, "lower-bound")),
                }
            };
            println!("{mu0:?},{},{verdict}", fmt_opt(bound));
        }
        return Ok(exit::OK);
    }

    if mu0s.len() != 1 {
        return Err(CliError::Usage("a list of --mu0 values needs --reliability".into()));
    }
    if a.sigma0.is_none() {
        return Err(CliError::Usage("--sigma0 is required for the T grid".into()));
    }
    let times = match (&a.t, &a.t_grid) {
        (Some(t), None) => parse_list(t, "--T")?,
        (None, Some(g)) => parse_grid(g)?,
        _ => return Err(CliError::Usage("give either --T or --T-grid (or --reliability)".into())),
    };
    println!("T,bias,nested_ratio,B,W,BoverW");
    for t in times {
        let spec = base.with_time(t)?;
        let avg = rhat_ratio_averaged_diffusion(&spec).ok();
        println!(
            "{t:?},{:?},{:?},{},{},{}",
            bias(&spec),
            nested_ratio(&spec),
            fmt_opt(avg.map(|r| r.b)),
            fmt_opt(avg.map(|r| r.w)),
            fmt_opt(avg.map(|r| r.ratio)),
        );
    }
    Ok(exit::OK)
}

/// `reliable`/`unreliable` when `σ₀` was given, otherwise the bound kind.
fn verdict_for(sigma0: Option<f64>, bound: f64, kind: &str) -> String {
    match sigma0 {
        Some(s) if s * s > bound => "reliable".into(),
        Some(_) => "unreliable".into(),
        None => kind.into(),
    }
}
