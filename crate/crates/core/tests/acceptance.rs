//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=3,5` runs a subset.

use mixbound::asymptotics::{CanonicalTail, SlowVariationParams};
use mixbound::composite::{composite_conditioned_experiment, composite_rate_experiment, tail_equivalence_experiment};
use mixbound::generators::GeneratorPair;
use mixbound::inference::{fit_theta, positivity, HSample};
use mixbound::simlab::{
    boundary_rate_experiment, conditional_lr_experiment, default_workers, hybrid_gate, joint_limit_experiment, non_null_boundary_experiment,
    stable_exceedance_experiment, Engine, ExperimentConfig, RunStatus, StreamKey,
};
use mixbound::stable_laws::{
    g_sqrt_logpdf_taylor_check, skew_cauchy_cdf_below_zero, skew_cauchy_pdf, skew_cauchy_total_mass, stable_negativity, GLaw, StableSpec,
};
use rand::Rng;
use std::f64::consts::PI;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn engine() -> Engine {
    Engine::new(default_workers()).expect("thread pool")
}

fn cfg(pair: &str, n: u64, replicates: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig { pair: Some(pair.into()), n, replicates, master_seed: seed, ..Default::default() }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Exact-event equivalence of the positivity criterion and the fit.
fn c1() -> Outcome {
    let pairs: Vec<GeneratorPair> = [
        "gauss_cauchy",
        "gauss_laplace",
        "gauss_t(3,1)",
        "gauss_powerphi(1)",
        "gauss_powerphi(-0.75)",
        "gauss_regvar(0.25)",
        "gauss_psi(1)",
        "gauss_conv_laplace",
        "uniform_shift",
    ]
    .iter()
    .map(|n| GeneratorPair::from_name(n).unwrap())
    .collect();
    let key = StreamKey::new(1, "acceptance/equivalence");
    let (mut exceptions, mut positives) = (0u64, 0u64);
    let total = 100_000u64;
    for i in 0..total {
        let mut rng = key.rng(i);
        let pair = &pairs[(i % pairs.len() as u64) as usize];
        let n = rng.random_range(1..=50);
        // mixture draws so that both outcomes occur
        let theta: f64 = rng.random::<f64>() * 0.5;
        let xs: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < theta { pair.sample_f1(&mut rng) } else { pair.sample_f0(&mut rng) }).collect();
        let h = match HSample::from_pair(pair, &xs) {
            Ok(h) => h,
            Err(_) => continue,
        };
        let a = positivity(&h);
        let b = fit_theta(&h, 1.0).map(|f| f.positive).unwrap_or(!a);
        positives += a as u64;
        exceptions += (a != b) as u64;
    }
    outcome(exceptions == 0, format!("{total} samples, {positives} positive, {exceptions} exceptions"))
}

/// Unequal supports: P0(theta-hat > 0) = 2^-n.
fn c2() -> Outcome {
    let r = boundary_rate_experiment(&engine(), &cfg("uniform_shift", 10, 1_000_000, 2), &[10]).unwrap();
    let p = &r.points[0];
    let z = (p.p_hat - p.theory) / p.se;
    outcome(z.abs() < 3.0, format!("p_hat = {:.4e}, 2^-10 = {:.4e}, se = {:.2e}, z = {z:.2}", p.p_hat, p.theory, p.se))
}

/// G law: round trip, cumulants, Taylor remark.
fn c3() -> Outcome {
    let g = GLaw;
    let rt = (1..1000).map(|i| i as f64 / 1000.0).map(|u| (g.cdf(g.quantile(u)) - u).abs()).fold(0.0f64, f64::max);
    let want = [1.0, 7.0 / 3.0, 32.0 / 3.0, 3194.0 / 45.0];
    let k = g.cumulants();
    let kerr = k.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
    let t = g_sqrt_logpdf_taylor_check();
    let parts = [rt <= 1e-10, kerr < 1e-6, t.max_rel_dev < 0.01];
    outcome(
        parts.iter().all(|p| *p),
        format!(
            "round trip {rt:.1e} [{}], cumulant err {kerr:.1e} [{}], Taylor max rel dev {:.3}% at x = {:.3} [{}]",
            ok(parts[0]),
            ok(parts[1]),
            100.0 * t.max_rel_dev,
            t.argmax,
            ok(parts[2])
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

/// Skew-Cauchy numerics.
fn c4() -> Outcome {
    let mass = skew_cauchy_total_mass(1.0).unwrap();
    let p = skew_cauchy_cdf_below_zero(1.0).unwrap();
    let x = 1e3;
    let tail = x * x * skew_cauchy_pdf(x, 1.0).unwrap() / (2.0 / PI);
    let parts = [(mass - 1.0).abs() < 1e-6, (p - 0.3652).abs() < 5e-4, (tail - 1.0).abs() < 0.05];
    outcome(
        parts.iter().all(|b| *b),
        format!(
            "mass - 1 = {:.1e} [{}], P(X<0) = {p:.6} [{}], x^2 f(x) / (2/pi) at 1e3 = {tail:.4} [{}]",
            mass - 1.0,
            ok(parts[0]),
            ok(parts[1]),
            ok(parts[2])
        ),
    )
}

/// Stable negativity for alpha = 1.5, formula and Monte Carlo.
fn c5() -> Outcome {
    let alpha = 1.5;
    let f = stable_negativity(StableSpec::new(alpha, 1.0).unwrap()).unwrap();
    let mc = stable_exceedance_experiment(&engine(), alpha, 10_000, 20_000, 5).unwrap();
    let parts = [(f - 1.0 / alpha).abs() < 1e-10, (mc.p_hat - 1.0 / 3.0).abs() <= 0.02];
    outcome(
        parts.iter().all(|b| *b),
        format!("P(X<0) = {f:.12} vs 1/alpha [{}], Pareto exceedance {:.4} vs 1/3 [{}]", ok(parts[0]), mc.p_hat, ok(parts[1])),
    )
}

/// Boundary error-rate curves.
fn c6() -> Outcome {
    let e = engine();
    let grid = [1_000, 10_000, 100_000];
    let mut pass = true;
    let mut detail = Vec::new();
    for pair in ["gauss_cauchy", "gauss_laplace"] {
        let r = boundary_rate_experiment(&e, &cfg(pair, 0, 20_000, 6), &grid).unwrap();
        let ratios: Vec<f64> = r.points.iter().map(|p| p.p_hat / p.theory).collect();
        let ps: Vec<f64> = r.points.iter().map(|p| p.p_hat).collect();
        let band = ratios.iter().all(|q| (0.6..=1.4).contains(q));
        let mono = strictly_decreasing(&ps);
        pass &= band && mono;
        detail.push(format!(
            "{pair}: p_hat {:?} ratio {:?} band [{}] monotone [{}]",
            ps.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>(),
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>(),
            ok(band),
            ok(mono)
        ));
    }
    outcome(pass, detail.join("; "))
}

/// Conditioned LR law, Gauss-Cauchy, n = 1e5, ten seeds.
fn c7() -> Outcome {
    let e = engine();
    let mut ks = Vec::new();
    let mut g_wins = 0;
    let mut kappas = Vec::new();
    let mut capped = false;
    for seed in 1..=10 {
        let mut c = cfg("gauss_cauchy", 100_000, 200_000, seed);
        c.target_conditioned = Some(2000);
        let r = conditional_lr_experiment(&e, &c).unwrap();
        capped |= r.summary.status != RunStatus::Complete;
        ks.push(r.summary.ks_r);
        g_wins += (r.summary.x2_g < r.summary.x2_chi2) as u32;
        kappas.push(r.summary.kappa_hat);
    }
    let ks_max = ks.iter().cloned().fold(0.0, f64::max);
    let kmin = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    let kmax = kappas.iter().cloned().fold(0.0, f64::max);
    let parts = [ks_max < 0.05 && !capped, g_wins >= 8, kmin >= 0.95 && kmax <= 1.10];
    outcome(
        parts.iter().all(|b| *b),
        format!(
            "max KS(R) {ks_max:.4} [{}], X2(G) < X2(chi2_1) in {g_wins}/10 [{}], kappa-hat in [{kmin:.4}, {kmax:.4}] [{}]",
            ok(parts[0]),
            ok(parts[1]),
            ok(parts[2])
        ),
    )
}

/// Joint mean/max limit for the canonical tail.
fn c8() -> Outcome {
    let e = engine();
    let params = SlowVariationParams::new(2.0, 0.0, 0.5, 0.0, 1.0).unwrap();
    let tail = CanonicalTail::new(params).unwrap();
    let gate = hybrid_gate(&e, &tail, 10_000, 10_000, 8).unwrap();
    let mut c = cfg("", 0, 400_000, 8);
    c.pair = None;
    c.n_grid = Some(vec![10_000, 100_000, 1_000_000]);
    c.target_conditioned = Some(2000);
    let r = joint_limit_experiment(&e, &params, &c).unwrap();
    let last = r.points.last().unwrap();
    let dev: Vec<f64> = r.points.iter().map(|p| p.median_line_dev).collect();
    let complete = r.points.iter().all(|p| p.status == RunStatus::Complete);
    let parts = [gate.passed, last.ks_ratio < 0.05 && complete, last.p_pos_given_big_max >= 0.95, strictly_decreasing(&dev)];
    outcome(
        parts.iter().all(|b| *b),
        format!(
            "sampler gate KS sum {:.4} max {:.4} [{}], KS ratio at 1e6 {:.4} [{}], P(mean>0 | max>2T) {:.4} of {} [{}], line dev {:?} [{}]",
            gate.ks_sum,
            gate.ks_max,
            ok(parts[0]),
            last.ks_ratio,
            ok(parts[1]),
            last.p_pos_given_big_max,
            last.big_max_count,
            ok(parts[2]),
            dev.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            ok(parts[3])
        ),
    )
}

/// Non-null boundary: P1(theta-hat < 1) -> 1/2.
fn c9() -> Outcome {
    let e = engine();
    let mut pass = true;
    let mut detail = Vec::new();
    for pair in ["gauss_cauchy", "gauss_laplace"] {
        let r = non_null_boundary_experiment(&e, &cfg(pair, 10_000, 10_000, 9)).unwrap();
        let z = (r.p_hat - 0.5) / r.se;
        pass &= z.abs() < 3.0;
        detail.push(format!("{pair}: {:.4} (z = {z:.2})", r.p_hat));
    }
    outcome(pass, detail.join(", "))
}

/// Composite mixture, tau = 1.
fn c10() -> Outcome {
    let e = engine();
    let tau = 1.0;
    let rate = composite_rate_experiment(&e, tau, &[10_000, 100_000], 20_000, 10).unwrap();
    let ratios: Vec<f64> = rate.iter().map(|p| p.p_hat / p.theory).collect();
    let cond = composite_conditioned_experiment(&e, tau, 1_000_000, 100_000, 200, 10).unwrap();
    let parts = [cond.frac_nu_eq_tau >= 0.95 && cond.status == RunStatus::Complete, ratios.iter().all(|q| (0.6..=1.4).contains(q))];
    outcome(
        parts.iter().all(|b| *b),
        format!(
            "nu-hat = tau in {}/{} conditioned at n = 1e6 ({:.3}) [{}], rate ratios {:?} [{}]",
            cond.nu_eq_tau,
            cond.conditioned,
            cond.frac_nu_eq_tau,
            ok(parts[0]),
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>(),
            ok(parts[1])
        ),
    )
}

/// Tail equivalence of Student-t scale pairs.
fn c11() -> Outcome {
    let e = engine();
    let p1 = GeneratorPair::gauss_t(3.0, 1.0).unwrap();
    let p2 = GeneratorPair::gauss_t(3.0, 2.0).unwrap();
    let mut c = cfg("", 0, 100_000, 11);
    c.pair = None;
    c.n_grid = Some(vec![10_000, 100_000, 1_000_000]);
    c.target_conditioned = Some(200);
    let r = tail_equivalence_experiment(&e, &p1, &p2, &c).unwrap();
    let med: Vec<f64> = r.points.iter().map(|p| p.median_abs_diff).collect();
    let last = *med.last().unwrap();
    let parts = [strictly_decreasing(&med), last < 0.1];
    outcome(
        parts.iter().all(|b| *b),
        format!("median |L1 - L2| {:?} decreasing [{}], < 0.1 at 1e6 [{}]", med.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(), ok(parts[0]), ok(parts[1])),
    )
}

/// Determinism across worker counts.
fn c12() -> Outcome {
    let run = |workers: usize| {
        let e = Engine::new(workers).unwrap();
        let mut c = cfg("gauss_cauchy", 2_000, 50_000, 12);
        c.target_conditioned = Some(300);
        c.workers = Some(workers);
        let lr = serde_json::to_string_pretty(&conditional_lr_experiment(&e, &c).unwrap().summary).unwrap();
        let rate = serde_json::to_string_pretty(&boundary_rate_experiment(&e, &cfg("gauss_laplace", 0, 3_000, 12), &[100, 1000]).unwrap()).unwrap();
        lr + &rate
    };
    let a = run(1);
    let b = run(3);
    let c = run(8);
    outcome(a == b && b == c, format!("summary JSON ({} bytes) identical for 1, 3 and 8 workers: {}", a.len(), a == b && b == c))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "positivity <=> fit positive", c1),
        (2, "unequal supports 2^-n", c2),
        (3, "G law internals", c3),
        (4, "skew-Cauchy numerics", c4),
        (5, "stable negativity alpha = 1.5", c5),
        (6, "boundary rate curves", c6),
        (7, "conditioned LR law", c7),
        (8, "joint mean/max limit", c8),
        (9, "non-null boundary", c9),
        (10, "composite tau = 1", c10),
        (11, "tail equivalence", c11),
        (12, "determinism", c12),
    ];
    let mut failed = Vec::new();
    for (k, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&k)) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} {tag} {name}: {} ({:.1} s)", o.detail, t.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
