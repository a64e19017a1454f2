//! Acceptance criteria, one `PASS`/`FAIL` line each.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails. The process exits non-zero when a criterion outside
//! `EXPECTED_FAILURES` fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use superchain::diagnostics::{bw_limits_from_chain_law, nested_ratios, ChainLaw};
use superchain::experiments::{
    default_warmups, fraction_above_quantile, langevin_cross_check, ratio_variance_study, reliability_study,
    rosenbrock_figure, run_sweep, scaled_squared_error, ErrorRecord, RatioVariancePlan, ReliabilityPlan,
    ReliabilitySummary, ReliabilityTarget, RosenbrockFigurePlan, SweepPlan,
};
use superchain::langevin_oracle::{a2_ceiling, bias_crossing_time, half_t_coth, shape_fns, SERIES_CUTOFF};
use superchain::rng::replication_seed;
use superchain::samplers::{default_tuning, exact_gaussian_chain, InitDistribution, InitScheme, Kernel, SamplerConfig};
use superchain::stats::{chi2_cdf, ks_distance, median};
use superchain::targets::{
    benchmark_moments, default_data_dir, finite_difference_error, load_target, BenchmarkMoments, TargetModel,
    TARGET_IDS,
};
use superchain::{nested_rhat, rhat, threshold, ChainDraws, SuperchainLayout};

/// Criteria known not to hold as stated; they still print `FAIL`.
///
/// - 7: with K = 4 the N = 1 nested ratio is about χ²₃/(3M) for stationary
///   chains, so each seed falls below the threshold with probability near
///   0.65 and the 10-seed majority vote itself holds only about 3 times in 4.
/// - 11b: the ceiling over δ′ behaves like 2/(|µ₀ − µ|√δ′) for large `T*`;
///   it stays above 3 for |µ₀ − µ| ≤ 2 but drops below 3 on most of the δ′
///   grid once |µ₀ − µ| ≥ 3.
const EXPECTED_FAILURES: &[&str] = &["7", "11b"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, &str, u64, Check); 13] = [
        ("1", "counterexample chain law", 1, c1_counterexample),
        ("2", "stationary R-hat floor", 1, c2_stationary_floor),
        ("3", "N=1 persistent variance", 30, c3_persistent_variance),
        ("4", "M=1 reduction", 5, c4_m1_reduction),
        ("5", "Langevin oracle vs MALA", 120, c5_langevin_vs_mala),
        ("6", "reliability boundary", 300, c6_reliability_boundary),
        ("7", "Rosenbrock few vs many chains", 300, c7_rosenbrock),
        ("8", "bimodal failure", 600, c8_bimodal),
        ("9", "chi-squared calibration", 60, c9_chi2_calibration),
        ("10", "variance-of-ratio ordering", 180, c10_variance_ordering),
        ("11a", "shape-function identities", 1, c11a_identities),
        ("11b", "A2 ceiling at least 3 delta'", 1, c11b_a2_ceiling),
        ("12", "gradient oracles", 60, c12_gradients),
    ];
    let mut unexpected = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = out.pass && in_time;
        let timing = if in_time {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s, over the {budget}s budget", elapsed.as_secs_f64())
        };
        let status = if pass { "PASS" } else { "FAIL" };
        let note = if !pass && EXPECTED_FAILURES.contains(&id) { " [expected]" } else { "" };
        println!("{status} criterion {id} ({name}): {} [{timing}]{note}", out.detail);
        if !pass && !EXPECTED_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}

fn c1_counterexample() -> Outcome {
    let lag = [1.0, -0.5, 0.25, -0.125];
    let cov = (0..16usize).map(|i| lag[(i / 4).abs_diff(i % 4)]).collect();
    let law = ChainLaw::new(vec![0.0; 4], cov).expect("valid law");
    let (b, w) = bw_limits_from_chain_law(&law).expect("limits");
    // the stationary floor would need B/W ≥ 1/ESS₁ = B / Var θ with Var θ = 1
    let pass = (b - 0.109375).abs() <= 1e-12 && w > 1.0;
    outcome(pass, format!("B = {b}, W = {w:.6}"))
}

fn c2_stationary_floor() -> Outcome {
    let mut worst_gap = f64::INFINITY;
    let mut worst_equality: f64 = 0.0;
    for phi in [0.0, 0.5, 0.9] {
        for n in [4, 16, 64] {
            let law = ChainLaw::ar1(n, phi, 1.0).expect("valid law");
            let (b, w) = bw_limits_from_chain_law(&law).expect("limits");
            let r = (1.0 + b / w).sqrt();
            let floor = (1.0 + 1.0 / law.ess1()).sqrt();
            worst_gap = worst_gap.min(r - floor);
            if phi == 0.0 {
                worst_equality = worst_equality.max((r - floor).abs());
            }
        }
    }
    let pass = worst_gap >= -1e-12 && worst_equality <= 1e-10;
    outcome(
        pass,
        format!("min(R - floor) = {worst_gap:.3e}, |R - floor| at phi=0 = {worst_equality:.1e}"),
    )
}

fn iid_layout(k: usize, m: usize, n: usize, seed: u64) -> ChainDraws {
    let layout = SuperchainLayout::new(k, m, n, 1).expect("layout").with_seed(seed);
    let init = InitDistribution::isotropic(1, 0.0, 1.0).expect("init");
    exact_gaussian_chain(0.0, 1.0, layout, &init, InitScheme::Independent).expect("chains")
}

fn c3_persistent_variance() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for m in [16, 128] {
        let ratios: Vec<f64> = (0..1000)
            .map(|rep| nested_ratios(&iid_layout(64, m, 1, replication_seed(3, rep))).expect("ratio")[0])
            .collect();
        let med = median(&ratios);
        let rel = (med * m as f64 - 1.0).abs();
        pass &= rel <= 0.2;
        details.push(format!("M={m}: median ratio x M = {:.4}", med * m as f64));
    }
    outcome(pass, details.join(", "))
}

fn c4_m1_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (k, n, d) = (rng.random_range(2..40), rng.random_range(2..60), rng.random_range(1..4));
        let layout = SuperchainLayout::new(k, 1, n, d).expect("layout");
        let shift: f64 = rng.random_range(-3.0..3.0);
        let values = (0..layout.total_values())
            .map(|_| shift + rng.sample::<f64, _>(StandardNormal) * 2.0)
            .collect();
        let draws = ChainDraws::new(layout, values).expect("draws");
        let nested = nested_rhat(&draws).expect("nested");
        let flat = rhat(&draws).expect("flat");
        for (a, b) in nested.iter().zip(&flat) {
            worst = worst.max((a.nr_hat - b.r_hat).abs() / b.r_hat);
        }
    }
    outcome(worst <= 1e-12, format!("max relative difference {worst:.2e} over 100 tensors"))
}

fn c5_langevin_vs_mala() -> Outcome {
    let pts = langevin_cross_check(256, 16, 0.04, 2.0, 2.0, &[0.5, 1.0, 2.0], 0).expect("cross-check");
    let pass = pts.iter().all(|p| p.relative_error <= 0.15);
    let detail = pts
        .iter()
        .map(|p| format!("T={}: {:.4} vs {:.4} ({:.1}%)", p.t, p.empirical, p.theory, 100.0 * p.relative_error))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn c6_reliability_boundary() -> Outcome {
    let plan = ReliabilityPlan::new(
        ReliabilityTarget::standard_gaussian(),
        vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        vec![0.0, 1.0, 4.0, 10.0, 25.0, 60.0],
    );
    let points = reliability_study(&plan).expect("study");
    let s = ReliabilitySummary::from_points(&points);
    outcome(
        s.agreement() >= 0.9,
        format!(
            "K={}, M={}: {}/{} agree ({:.1}%), {} exempt",
            plan.k,
            plan.m,
            s.agreed,
            s.compared,
            100.0 * s.agreement(),
            s.exempt
        ),
    )
}

fn mcmc_setup(id: &str) -> (Arc<dyn TargetModel>, Kernel, InitDistribution) {
    let target = load_target(id, None).expect("target");
    let t = default_tuning(id);
    let config = SamplerConfig {
        kind: t.kind,
        step_size: t.step_size,
        leapfrog: t.leapfrog,
        warmup: 0,
        sampling: 1,
    };
    let kernel = Kernel::mcmc(target.clone(), &config).expect("kernel");
    let init = InitDistribution::isotropic(target.dim(), t.init_mu0, t.init_sigma0).expect("init");
    (target, kernel, init)
}

fn c7_rosenbrock() -> Outcome {
    let (target, kernel, init) = mcmc_setup("rosenbrock");
    let bench = benchmark_moments(target.as_ref(), &default_data_dir()).expect("moments");
    let thr = threshold(1e-4, 128);
    let mut votes = 0;
    let mut notes = Vec::new();
    for seed in 0..10 {
        let plan = RosenbrockFigurePlan {
            kernel: kernel.clone(),
            init: init.clone(),
            warmup: 200,
            few: 4,
            k: 4,
            m: 128,
            ns: (1..=32).collect(),
            seed: replication_seed(7, seed),
        };
        let pts = rosenbrock_figure(&plan, &bench).expect("figure");
        let nested_below = pts[0].nrhat < thr;
        // flat R̂ is undefined at N = 1 and so never below 1.01 there
        let min_flat = pts.iter().map(|p| p.rhat_many).filter(|r| !r.is_nan()).fold(f64::INFINITY, f64::min);
        let ok = nested_below && min_flat > 1.01;
        votes += usize::from(ok);
        notes.push(format!("{:.4}/{:.3}", pts[0].nrhat, min_flat));
    }
    outcome(
        votes > 5,
        format!(
            "{votes}/10 seeds with nRhat(N=1) < {thr:.5} and flat Rhat > 1.01 for N <= 32 (nRhat/min Rhat: {})",
            notes.join(" ")
        ),
    )
}

fn c8_bimodal() -> Outcome {
    let (target, kernel, init) = mcmc_setup("mixture");
    let bench = benchmark_moments(target.as_ref(), &default_data_dir()).expect("moments");
    let plan = SweepPlan {
        target: "mixture".into(),
        kernel,
        init,
        scheme: InitScheme::Superchain,
        warmups: default_warmups(),
        k: 16,
        m: 32,
        n: 1,
        replications: 10,
        seed: 8,
        tau: 1e-4,
    };
    let records = run_sweep(&plan, &bench).expect("sweep");
    let thr = threshold(plan.tau, plan.m);
    let in_range: Vec<&ErrorRecord> = records.iter().filter(|r| r.warmup <= 1000).collect();
    let above = in_range.iter().filter(|r| r.nrhat > thr).count();
    let min = in_range.iter().map(|r| r.nrhat).fold(f64::INFINITY, f64::min);
    outcome(
        above == in_range.len() && !in_range.is_empty(),
        format!(
            "K=16, M=32: {above}/{} records above {thr:.5}, smallest nRhat {min:.4}",
            in_range.len()
        ),
    )
}

fn c9_chi2_calibration() -> Outcome {
    let (k, m) = (16, 8);
    let bench = BenchmarkMoments::analytic(vec![0.0], vec![1.0]);
    let thr = threshold(1e-4, m);
    let records: Vec<ErrorRecord> = (0..2000)
        .map(|rep| {
            let draws = iid_layout(k, m, 1, replication_seed(9, rep));
            let e2 = scaled_squared_error(&draws, &bench).expect("E2")[0];
            ErrorRecord {
                target: "gaussian".into(),
                dim: 0,
                warmup: 0,
                rep: rep as usize,
                nrhat: nested_rhat(&draws).expect("nested")[0].nr_hat,
                e2,
                threshold: thr,
                divergent: false,
            }
        })
        .collect();
    let e2: Vec<f64> = records.iter().map(|r| r.e2).collect();
    let ks = ks_distance(&e2, |x| chi2_cdf(x, 1.0));
    let fraction = fraction_above_quantile(&records, &[f64::INFINITY])[0].fraction;
    let pass = ks < 0.05 && (fraction - 0.05).abs() <= 0.02;
    outcome(pass, format!("KS = {ks:.4}, fraction above the 95% quantile = {fraction:.4}"))
}

fn c10_variance_ordering() -> Outcome {
    let plan = |layouts: Vec<(usize, usize)>, ns: Vec<usize>| RatioVariancePlan {
        kernel: Kernel::ar1(vec![0.0], 0.5, vec![1.0]).expect("kernel"),
        init: InitDistribution::isotropic(1, 0.0, 1.0).expect("init"),
        scheme: InitScheme::Independent,
        layouts,
        ns,
        warmups: vec![0],
        replications: 200,
        seed: 10,
    };
    let by_k = ratio_variance_study(&plan(vec![(2, 256), (256, 2)], vec![1])).expect("K study");
    let by_n = ratio_variance_study(&plan(vec![(16, 32)], vec![1, 10])).expect("N study");
    let (k2, k256) = (by_k[0].variance, by_k[1].variance);
    let (n1, n10) = (by_n[0].variance, by_n[1].variance);
    outcome(
        k2 < k256 && n10 < n1,
        format!("Var at K=2 {k2:.3e} vs K=256 {k256:.3e}; at K=16 N=10 {n10:.3e} vs N=1 {n1:.3e}"),
    )
}

fn c11a_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in [1e-6, 1e-3, 0.1, 1.0, 10.0] {
        let f = shape_fns(t);
        let rhs = half_t_coth(t) * f.rho * f.rho;
        worst = worst.max((f.xi - rhs).abs() / f.xi);
    }
    // below the cutoff the series branch is taken
    let t0 = SERIES_CUTOFF * 1e-8;
    let small = shape_fns(t0);
    let limit_err = [small.rho, small.xi, small.eta]
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let pass = worst <= 1e-12 && limit_err <= 1e-11;
    outcome(
        pass,
        format!("max relative identity error {worst:.1e}, series limit error {limit_err:.1e}"),
    )
}

fn c11b_a2_ceiling() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0.0);
    let mut checked = 0;
    for gap in 1..=5 {
        let gap2 = f64::from(gap * gap);
        for i in 1..100 {
            let delta_prime = f64::from(i) / 100.0;
            let Some(t_star) = bias_crossing_time(gap2, delta_prime) else { continue };
            let ratio = a2_ceiling(t_star) / delta_prime;
            checked += 1;
            if ratio < worst {
                worst = ratio;
                at = (f64::from(gap), delta_prime);
            }
        }
    }
    outcome(
        worst >= 3.0,
        format!(
            "smallest ceiling/delta' = {worst:.3} at |mu0 - mu| = {}, delta' = {} ({checked} grid points)",
            at.0, at.1
        ),
    )
}

fn c12_gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for &id in TARGET_IDS {
        let target = match load_target(id, None) {
            Ok(t) => t,
            Err(e) => {
                notes.push(format!("{id} skipped ({e})"));
                continue;
            }
        };
        let dim = target.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut target_worst: f64 = 0.0;
        for _ in 0..100 {
            let theta: Vec<f64> = (0..dim).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            let coords: Vec<usize> = if dim > 50 {
                (0..10).map(|_| rng.random_range(0..dim)).collect()
            } else {
                (0..dim).collect()
            };
            target_worst = target_worst.max(finite_difference_error(target.as_ref(), &theta, &coords));
        }
        worst = worst.max(target_worst);
        notes.push(format!("{id} {target_worst:.1e}"));
    }
    outcome(worst <= 1e-5, notes.join(", "))
}
