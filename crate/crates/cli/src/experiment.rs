use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{Map, Value};
use superchain::config::KeyValueConfig;
use superchain::diagnostics::threshold;
use superchain::experiments::plot::{Plot, Series};
use superchain::experiments::{
    default_epsilon_grid, default_warmups, fraction_above_quantile, ratio_variance_study, reliability_study,
    rosenbrock_figure, run_sweep, sweep_spearman, write_figure_csv, write_fraction_csv, write_ratio_variance_csv,
    write_sweep_csv, ErrorRecord, RatioVariancePlan, RatioVariancePoint, ReliabilityPlan, ReliabilitySummary,
    ReliabilityTarget, RosenbrockFigurePlan, SweepPlan, Verdict, CHI2_1_Q95,
};
use superchain::samplers::{default_tuning, InitDistribution, InitScheme, Kernel, SamplerConfig, SamplerKind};
use superchain::targets::{benchmark_moments, default_data_dir, load_target, TargetModel};

use crate::bundle::{config_json, Bundle};
use crate::settings::{flag, resolve};
use crate::{exit, CliError, ExperimentArgs, ExperimentName, Result};

/// Targets of the full sweep grid.
const SWEEP_TARGETS: &[&str] = &[
    "rosenbrock",
    "eight_schools",
    "german_credit_synthetic",
    "pharmacokinetics",
    "item_response",
    "mixture",
];

const COMMON_KEYS: &[&str] = &[
    "target",
    "seed",
    "replications",
    "scale",
    "sampler",
    "step_size",
    "leapfrog",
    "init.mu0",
    "init.sigma0",
    "init.scheme",
];

fn known_keys(name: ExperimentName) -> Vec<&'static str> {
    let extra: &[&str] = match name {
        ExperimentName::Sweep | ExperimentName::Fraction => &["K", "M", "N", "warmups", "tau", "epsilons"],
        ExperimentName::RatioVariance => &[
            "variant", "KM", "Ks", "K", "M", "Ns", "N", "totals", "warmups", "kernel", "phi",
        ],
        ExperimentName::Reliability => &[
            "K",
            "M",
            "mu0s",
            "sigma0_sqs",
            "delta",
            "delta_prime",
            "max_steps",
            "check_every",
        ],
        ExperimentName::BenchmarksFigure => &["K", "M", "few", "warmup", "max_n"],
    };
    COMMON_KEYS.iter().chain(extra).copied().collect()
}

struct Context {
    cfg: KeyValueConfig,
    data_dir: PathBuf,
    plots: bool,
    scale: f64,
    seed: u64,
}

impl Context {
    fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.cfg.parse_list(key)?)
    }

    fn or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.cfg.parse_or(key, default)?)
    }

    /// `round(base / scale)`, at least `floor`.
    fn scaled(&self, base: f64, floor: usize) -> usize {
        ((base / self.scale).round() as usize).max(floor)
    }

    /// Kernel and starting distribution for an MCMC run on `id`.
    fn mcmc(&self, id: &str) -> Result<(Arc<dyn TargetModel>, Kernel, InitDistribution)> {
        let target = load_target(id, Some(&self.data_dir))?;
        let t = default_tuning(id);
        let kind: SamplerKind = self.or("sampler", t.kind)?;
        let config = SamplerConfig {
            kind,
            step_size: self.or("step_size", t.step_size)?,
            leapfrog: if kind == SamplerKind::Mala { 1 } else { self.or("leapfrog", t.leapfrog)? },
            warmup: 0,
            sampling: 1,
        };
        let init = InitDistribution::isotropic(
            target.dim(),
            self.or("init.mu0", t.init_mu0)?,
            self.or("init.sigma0", t.init_sigma0)?,
        )?;
        let kernel = Kernel::mcmc(target.clone(), &config)?;
        Ok((target, kernel, init))
    }
}

pub fn run(a: ExperimentArgs) -> Result<u8> {
    let cfg = resolve(
        a.config.as_deref(),
        &a.set,
        &[
            flag("target", &a.target),
            flag("scale", &a.scale),
            flag("seed", &a.seed),
            flag("replications", &a.replications),
        ],
        &known_keys(a.name),
    )?;
    let mut scale: f64 = cfg.parse_or("scale", 1.0)?;
    if a.full {
        scale = 1.0;
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Usage(format!("scale must be positive, got {scale}")));
    }
    let ctx = Context {
        seed: cfg.parse_or("seed", 0)?,
        cfg,
        data_dir: a.data_dir.clone().unwrap_or_else(default_data_dir),
        plots: a.plots,
        scale,
    };
    let mut bundle = Bundle::create(&a.out)?;
    let mut meta = Map::new();
    meta.insert("command".into(), Value::from("experiment"));
    meta.insert(
        "experiment".into(),
        Value::from(format!("{:?}", a.name).to_lowercase()),
    );
    meta.insert("config".into(), config_json(&ctx.cfg));
    meta.insert("scale".into(), Value::from(scale));
    meta.insert("full".into(), Value::from(a.full));
    meta.insert("seed".into(), Value::from(ctx.seed));

    match a.name {
        ExperimentName::Sweep | ExperimentName::Fraction => {
            sweep(&ctx, a.name == ExperimentName::Fraction, a.full, &mut bundle, &mut meta)?
        }
        ExperimentName::RatioVariance => ratio_variance(&ctx, &mut bundle, &mut meta)?,
        ExperimentName::Reliability => reliability(&ctx, &mut bundle, &mut meta)?,
        ExperimentName::BenchmarksFigure => figure(&ctx, &mut bundle, &mut meta)?,
    }
    let manifest = bundle.finish(meta)?;
    println!("wrote {}", manifest.display());
    Ok(exit::OK)
}

fn write_plot(bundle: &mut Bundle, name: &str, plot: &Plot) -> Result<()> {
    bundle.write(name, plot.to_svg())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn sweep(ctx: &Context, fraction: bool, full: bool, bundle: &mut Bundle, meta: &mut Map<String, Value>) -> Result<()> {
    let targets: Vec<String> = match ctx.cfg.get("target") {
        None if full => SWEEP_TARGETS.iter().map(|s| s.to_string()).collect(),
        None => vec!["rosenbrock".into()],
        Some("all") => SWEEP_TARGETS.iter().map(|s| s.to_string()).collect(),
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    let km = ctx.scaled(2048.0, 2);
    let k = ctx.or("K", ((16.0 / ctx.scale.sqrt()).round() as usize).max(2))?;
    let m = ctx.or("M", (km / k).max(1))?;
    let warmups = ctx.list("warmups")?.unwrap_or_else(default_warmups);
    let epsilons = ctx.list("epsilons")?.unwrap_or_else(default_epsilon_grid);
    let replications = ctx.or("replications", 10)?;
    let tau = ctx.or("tau", 1e-4)?;
    let scheme: InitScheme = ctx.or("init.scheme", InitScheme::Superchain)?;

    let mut records: Vec<ErrorRecord> = Vec::new();
    let mut per_target = Map::new();
    for id in &targets {
        let (target, kernel, init) = ctx.mcmc(id)?;
        let bench = benchmark_moments(target.as_ref(), &ctx.data_dir)?;
        let plan = SweepPlan {
            target: id.clone(),
            kernel,
            init,
            scheme,
            warmups: warmups.clone(),
            k,
            m,
            n: ctx.or("N", 1)?,
            replications,
            seed: ctx.seed,
            tau,
        };
        let recs = run_sweep(&plan, &bench)?;
        let thr = threshold(tau, m);
        let below = recs.iter().filter(|r| r.nrhat <= thr).count();
        let divergent = recs.iter().filter(|r| r.divergent).count();
        let rho = sweep_spearman(&recs);
        println!(
            "{id}: {} records, {below} below threshold {thr:.5}, {divergent} flagged, Spearman {rho:.3}",
            recs.len()
        );
        let mut info = Map::new();
        info.insert("records".into(), Value::from(recs.len()));
        info.insert("below_threshold".into(), Value::from(below));
        info.insert("flagged".into(), Value::from(divergent));
        info.insert("spearman".into(), Value::from(rho));
        info.insert("benchmark".into(), serde_json::to_value(bench.provenance).expect("serializable"));
        per_target.insert(id.clone(), Value::Object(info));

        if fraction {
            let points = fraction_above_quantile(&recs, &epsilons);
            let name = if targets.len() == 1 { "fraction.csv".to_string() } else { format!("fraction_{id}.csv") };
            bundle.write(&name, csv_bytes(|b| write_fraction_csv(&points, b))?)?;
            if ctx.plots {
                let mut p = Plot::new(format!("{id}: E² above the χ²₁ 0.95 quantile"), "ε", "fraction");
                p.log_x = true;
                let pts = points.iter().filter(|p| p.epsilon.is_finite()).map(|p| (p.epsilon, p.fraction)).collect();
                p.series.push(Series::line(id.clone(), pts));
                p.h_lines.push((0.05, "0.05".into()));
                write_plot(bundle, &name.replace(".csv", ".svg"), &p)?;
            }
        }
        records.extend(recs);
    }
    records.sort_by(|a, b| (&a.target, a.warmup, a.rep, a.dim).cmp(&(&b.target, b.warmup, b.rep, b.dim)));
    bundle.write("sweep.csv", csv_bytes(|b| write_sweep_csv(&records, b))?)?;
    if ctx.plots {
        let mut p = Plot::new("Scaled squared error against nested R̂", "nRhat − 1", "E²");
        p.log_x = true;
        p.log_y = true;
        for id in &targets {
            let pts = records
                .iter()
                .filter(|r| &r.target == id)
                .map(|r| (r.nrhat - 1.0, r.e2))
                .collect();
            p.series.push(Series::scatter(id.clone(), pts));
        }
        p.h_lines.push((CHI2_1_Q95, "χ²₁ 0.95".into()));
        write_plot(bundle, "sweep.svg", &p)?;
    }
    meta.insert("K".into(), Value::from(k));
    meta.insert("M".into(), Value::from(m));
    meta.insert("replications".into(), Value::from(replications));
    meta.insert("warmup_reuse".into(), Value::from("continued: one run per replication, checkpointed at each warmup length"));
    meta.insert("targets".into(), Value::Object(per_target));
    Ok(())
}

fn ratio_variance(ctx: &Context, bundle: &mut Bundle, meta: &mut Map<String, Value>) -> Result<()> {
    let variant = ctx.cfg.get("variant").unwrap_or("K").to_string();
    let km = ctx.or("KM", ctx.scaled(2048.0, 4))?;
    let nonstationary = vec![1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 100];
    let default_kernel = if variant == "N" { "ar1" } else { "mcmc" };
    let kernel_kind = ctx.cfg.get("kernel").unwrap_or(default_kernel).to_string();
    let id = ctx.cfg.get("target").unwrap_or("gaussian").to_string();

    let (kernel, mut init, default_scheme) = match kernel_kind.as_str() {
        "ar1" => {
            let phi = ctx.or("phi", 0.5)?;
            let init = InitDistribution::isotropic(1, ctx.or("init.mu0", 0.0)?, ctx.or("init.sigma0", 1.0)?)?;
            (Kernel::ar1(vec![0.0], phi, vec![1.0])?, init, InitScheme::Independent)
        }
        "mcmc" => {
            let (_, kernel, init) = ctx.mcmc(&id)?;
            (kernel, init, InitScheme::Superchain)
        }
        other => return Err(CliError::Usage(format!("kernel must be `ar1` or `mcmc`, got `{other}`"))),
    };
    let default_warmups = if kernel_kind == "ar1" { vec![0] } else { nonstationary };
    let warmups = ctx.list("warmups")?.unwrap_or(default_warmups);
    let replications = ctx.or("replications", 100)?;
    let scheme: InitScheme = ctx.or("init.scheme", default_scheme)?;

    let (layouts, ns, schemes) = match variant.as_str() {
        "K" => {
            let ks = ctx.list("Ks")?.unwrap_or_else(|| {
                [2, 8, 32, 128, 512, 1024].into_iter().filter(|&k| k * 2 <= km && km % k == 0).collect()
            });
            (RatioVariancePlan::layouts_for_total(km, &ks)?, vec![ctx.or("N", 1)?], vec![scheme])
        }
        "N" => {
            let k = ctx.or("K", 16)?;
            let ns = ctx.list("Ns")?.unwrap_or_else(|| vec![1, 2, 5, 10]);
            (RatioVariancePlan::layouts_for_total(km, &[k])?, ns, vec![scheme])
        }
        "total" => {
            let totals: Vec<usize> = ctx.list("totals")?.unwrap_or_else(|| vec![128, 256, 512, 1024, 2048]);
            let mut layouts: Vec<(usize, usize)> = totals.iter().map(|&t| (t / 2, 2)).collect();
            layouts.push((2, totals.iter().copied().min().unwrap_or(128) / 2));
            (layouts, vec![ctx.or("N", 1)?], vec![scheme])
        }
        "transition" => {
            let k = ctx.or("K", 32)?;
            let m = ctx.or("M", ctx.scaled(1024.0, 2))?;
            init = match ctx.cfg.get("init.sigma0") {
                Some(_) => init,
                None => InitDistribution::isotropic(init.dim().unwrap_or(1), ctx.or("init.mu0", 0.0)?, 3.0)?,
            };
            (vec![(k, m)], vec![ctx.or("N", 1)?], vec![InitScheme::Superchain, InitScheme::Independent])
        }
        other => {
            return Err(CliError::Usage(format!(
                "variant must be one of K, N, total, transition; got `{other}`"
            )))
        }
    };

    let mut points: Vec<RatioVariancePoint> = Vec::new();
    for scheme in schemes {
        let plan = RatioVariancePlan {
            kernel: kernel.clone(),
            init: init.clone(),
            scheme,
            layouts: layouts.clone(),
            ns: ns.clone(),
            warmups: warmups.clone(),
            replications,
            seed: ctx.seed,
        };
        points.extend(ratio_variance_study(&plan)?);
    }
    bundle.write("ratio_variance.csv", csv_bytes(|b| write_ratio_variance_csv(&points, b))?)?;

    if ctx.plots {
        let by_warmup = warmups.len() > 1;
        let mut p = Plot::new(
            "Variance of nB̂/nŴ across replications",
            if by_warmup { "warmup" } else { "N" },
            "variance",
        );
        p.log_x = by_warmup && warmups[0] > 0;
        p.log_y = true;
        let mut keys: Vec<(InitScheme, usize, usize, usize)> = Vec::new();
        for q in &points {
            let key = (q.scheme, q.k, q.m, if by_warmup { q.n } else { 0 });
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for key in &keys {
            let pts = points
                .iter()
                .filter(|q| (q.scheme, q.k, q.m, if by_warmup { q.n } else { 0 }) == *key)
                .map(|q| (if by_warmup { q.warmup } else { q.n } as f64, q.variance))
                .collect();
            p.series.push(Series::line(format!("{} K={} M={}", key.0, key.1, key.2), pts));
        }
        write_plot(bundle, "ratio_variance.svg", &p)?;
        if variant == "transition" {
            let mut t = Plot::new("Variance of superchain means (mean nB̂)", "warmup", "mean nB̂");
            t.log_y = true;
            for scheme in [InitScheme::Superchain, InitScheme::Independent] {
                let pts = points
                    .iter()
                    .filter(|q| q.scheme == scheme)
                    .map(|q| (q.warmup as f64, q.mean_nb))
                    .collect();
                t.series.push(Series::line(scheme.to_string(), pts));
            }
            write_plot(bundle, "transition.svg", &t)?;
        }
    }
    println!("{} points over {} layouts, {replications} replications", points.len(), layouts.len());
    meta.insert("variant".into(), Value::from(variant));
    meta.insert("kernel".into(), Value::from(kernel_kind));
    meta.insert("KM".into(), Value::from(km));
    meta.insert("replications".into(), Value::from(replications));
    Ok(())
}

fn reliability(ctx: &Context, bundle: &mut Bundle, meta: &mut Map<String, Value>) -> Result<()> {
    let target = match ctx.cfg.get("target").unwrap_or("gaussian") {
        "gaussian" => ReliabilityTarget::standard_gaussian(),
        "mixture" | "bimodal" => ReliabilityTarget::default_mixture(),
        other => {
            return Err(CliError::Usage(format!(
                "reliability runs on `gaussian` or `mixture`, got `{other}`"
            )))
        }
    };
    let defaults = ReliabilityPlan::new(target, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![0.0, 1.0, 4.0, 10.0, 25.0, 60.0]);
    let plan = ReliabilityPlan {
        mu0s: ctx.list("mu0s")?.unwrap_or(defaults.mu0s.clone()),
        sigma0_sqs: ctx.list("sigma0_sqs")?.unwrap_or(defaults.sigma0_sqs.clone()),
        k: ctx.or("K", ctx.scaled(defaults.k as f64, 2))?,
        m: ctx.or("M", defaults.m)?,
        step_size: ctx.or("step_size", defaults.step_size)?,
        delta: ctx.or("delta", defaults.delta)?,
        delta_prime: ctx.or("delta_prime", defaults.delta_prime)?,
        max_steps: ctx.or("max_steps", defaults.max_steps)?,
        check_every: ctx.or("check_every", defaults.check_every)?,
        seed: ctx.seed,
        ..defaults
    };
    let points = reliability_study(&plan)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
    let mut csv = String::from(
        "mu0,sigma0_sq,crossing_step,ratio_at_crossing,scaled_bias_sq,min_ratio,empirical,theory,sigma0_sq_bound,exempt\n",
    );
    for p in &points {
        csv.push_str(&format!(
            "{:?},{:?},{},{},{},{:?},{},{},{},{}\n",
            p.mu0,
            p.sigma0_sq,
            p.crossing_step.map_or_else(String::new, |s| s.to_string()),
            opt(p.ratio_at_crossing),
            opt(p.scaled_bias_sq),
            p.min_ratio,
            p.empirical,
            p.theory.map_or_else(String::new, |t| t.to_string()),
            opt(p.sigma0_sq_bound),
            p.exempt
        ));
    }
    bundle.write("reliability.csv", csv)?;
    let summary = ReliabilitySummary::from_points(&points);
    let reliable = points.iter().filter(|p| p.empirical == Verdict::Reliable).count();
    println!(
        "{}: {reliable} of {} grid points reliable; agreement with the closed form {}/{} ({} exempt)",
        target.name(),
        points.len(),
        summary.agreed,
        summary.compared,
        summary.exempt
    );
    if ctx.plots {
        let mut p = Plot::new(format!("{}: (δ, δ′)-reliability", target.name()), "µ₀", "σ₀²");
        for verdict in [Verdict::Reliable, Verdict::Unreliable] {
            let pts = points
                .iter()
                .filter(|q| q.empirical == verdict)
                .map(|q| (q.mu0, q.sigma0_sq))
                .collect();
            p.series.push(Series::scatter(verdict.to_string(), pts));
        }
        let bound: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|q| Some((q.mu0, q.sigma0_sq_bound?)))
            .fold(Vec::new(), |mut acc, pt| {
                if !acc.contains(&pt) {
                    acc.push(pt);
                }
                acc
            });
        if !bound.is_empty() {
            p.series.push(Series::line("σ₀² bound", bound));
        }
        write_plot(bundle, "reliability.svg", &p)?;
    }
    meta.insert("K".into(), Value::from(plan.k));
    meta.insert("M".into(), Value::from(plan.m));
    meta.insert("summary".into(), serde_json::to_value(summary).expect("serializable"));
    Ok(())
}

fn figure(ctx: &Context, bundle: &mut Bundle, meta: &mut Map<String, Value>) -> Result<()> {
    let id = ctx.cfg.get("target").unwrap_or("rosenbrock").to_string();
    let (target, kernel, init) = ctx.mcmc(&id)?;
    let bench = benchmark_moments(target.as_ref(), &ctx.data_dir)?;
    let max_n = ctx.or("max_n", 1000)?;
    let plan = RosenbrockFigurePlan {
        kernel,
        init,
        warmup: ctx.or("warmup", 200)?,
        few: ctx.or("few", 4)?,
        k: ctx.or("K", 4)?,
        m: ctx.or("M", ctx.scaled(128.0, 1))?,
        ns: RosenbrockFigurePlan::doubling(max_n),
        seed: ctx.seed,
    };
    let points = rosenbrock_figure(&plan, &bench)?;
    bundle.write("benchmarks_figure.csv", csv_bytes(|b| write_figure_csv(&plan, &points, b))?)?;
    let many = plan.k * plan.m;
    if ctx.plots {
        let mut e = Plot::new(format!("{id}: squared error of the θ₁ estimate"), "sampling draws N", "squared error / Var");
        e.log_x = true;
        e.log_y = true;
        e.series.push(Series::line(format!("{} chains", plan.few), points.iter().map(|p| (p.n as f64, p.sq_error_few)).collect()));
        e.series.push(Series::line(format!("{many} chains"), points.iter().map(|p| (p.n as f64, p.sq_error_many)).collect()));
        e.h_lines.push((0.01, "Var/100".into()));
        write_plot(bundle, "figure_error.svg", &e)?;
        let mut r = Plot::new(format!("{id}: R̂ and nested R̂"), "sampling draws N", "value");
        r.log_x = true;
        r.series.push(Series::line(format!("R̂, {} chains", plan.few), points.iter().map(|p| (p.n as f64, p.rhat_few)).collect()));
        r.series.push(Series::line(format!("R̂, {many} chains"), points.iter().map(|p| (p.n as f64, p.rhat_many)).collect()));
        r.series.push(Series::line(format!("nR̂, K={} M={}", plan.k, plan.m), points.iter().map(|p| (p.n as f64, p.nrhat)).collect()));
        r.h_lines.push((1.01, "1.01".into()));
        r.h_lines.push((threshold(1e-4, plan.m), "nR̂ threshold".into()));
        write_plot(bundle, "figure_rhat.svg", &r)?;
    }
    if let Some(first) = points.first() {
        println!(
            "N={}: nRhat {:.5} (threshold {:.5}); squared error {:.2e} with {many} chains",
            first.n,
            first.nrhat,
            threshold(1e-4, plan.m),
            first.sq_error_many
        );
    }
    meta.insert("K".into(), Value::from(plan.k));
    meta.insert("M".into(), Value::from(plan.m));
    meta.insert("warmup".into(), Value::from(plan.warmup));
    Ok(())
}
