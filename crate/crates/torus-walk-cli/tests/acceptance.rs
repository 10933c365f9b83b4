//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL` line with the numbers behind it.

use std::path::Path;
use std::process::Command;

use torus_walk::chain::{build_shape_graph, exact_diffusivity, solve_corrector, SolveMode};
use torus_walk::loops::loop_space_size;
use torus_walk::make_params;
use torus_walk::montecarlo::{
    counting_constant_check, estimate_diffusivity, run_rng, simplex_integral_check, stationary_check, strip_statistics,
    SimConfig,
};
use torus_walk::verify::{brute_force_loop_count, run_suite, Suite};

const LOOP_CAP: u64 = 2_000_000;
/// Width of the agreement band for Monte Carlo against exact targets.
const SE_BAND: f64 = 3.0;
/// Width of the band for the per-shape stationary frequencies.
const SHAPE_BAND: f64 = 4.0;

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {n} ({name}): {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn exact_sigma(p: i64, n: i64) -> f64 {
    let params = make_params([p, p], [n, n]).unwrap();
    let graph = build_shape_graph(&params, LOOP_CAP).unwrap();
    let k = solve_corrector(&graph, SolveMode::default()).unwrap();
    exact_diffusivity(&graph, &k).sigma2_xhat
}

#[test]
fn criterion_01_trend_to_one_third() {
    let gaps: Vec<(i64, f64, f64)> = (2..=7)
        .map(|p| {
            let s = exact_sigma(p, 1);
            (p, s, (s - 1.0 / 3.0).abs())
        })
        .collect();
    let last_below_first = gaps[5].2 < gaps[0].2;
    let tail_non_increasing = gaps[1..].windows(2).all(|w| w[1].2 <= w[0].2);
    let detail: Vec<String> = gaps.iter().map(|(p, s, g)| format!("p={p}: {s:.6} (gap {g:.4})")).collect();
    verdict(1, "exact sigma^2 approaches 1/3", last_below_first && tail_non_increasing, &detail.join(", "));
}

#[test]
fn criterion_02_trend_to_one_fifth() {
    let exact = exact_sigma(2, 2);
    let params = make_params([2, 2], [2, 2]).unwrap();
    let cfg = SimConfig { steps: 200_000, runs: 2, burn_in: 50 * 990, seed: 20, batch: None };
    let mc = estimate_diffusivity(&params, &cfg).unwrap();
    let agrees = (mc.sigma2 - exact).abs() <= SE_BAND * mc.sigma2_se;
    let mut trend = Vec::new();
    for p in [4, 8, 16] {
        let params = make_params([p, p], [2, 2]).unwrap();
        let cfg = SimConfig { steps: 80_000, runs: 1, burn_in: 20_000, seed: 21, batch: Some(250) };
        let e = estimate_diffusivity(&params, &cfg).unwrap();
        trend.push((p, e.sigma2, e.sigma2_se, (e.sigma2 - 0.2).abs()));
    }
    let approaching = trend.windows(2).all(|w| w[1].3 < w[0].3);
    let detail: Vec<String> = trend.iter().map(|(p, s, se, g)| format!("p={p}: {s:.4}+-{se:.4} (gap {g:.4})")).collect();
    verdict(
        2,
        "sigma^2 approaches 1/5 for n=(2,2)",
        agrees && approaching,
        &format!(
            "p=2 exact {exact:.6} vs MC {:.4}+-{:.4} ({}); {}",
            mc.sigma2,
            mc.sigma2_se,
            if agrees { "agree" } else { "disagree" },
            detail.join(", ")
        ),
    );
}

#[test]
fn criterion_03_exact_martingale() {
    let mut detail = Vec::new();
    let mut pass = true;
    for p in 1..=4 {
        let params = make_params([p, p], [1, 1]).unwrap();
        let r = run_suite(&params, Suite::Corrector, LOOP_CAP).unwrap();
        pass &= r.passed && r.checked > 0;
        detail.push(format!("t={}: {} orbits zero drift={}", p + 1, r.checked, r.passed));
    }
    verdict(3, "exact corrector has zero drift", pass, &detail.join(", "));
}

#[test]
fn criterion_04_oracle_equivalences() {
    let params = make_params([3, 3], [1, 1]).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for s in [Suite::Bijection, Suite::NeighbourTest, Suite::Volume, Suite::Counts] {
        let r = run_suite(&params, s, LOOP_CAP).unwrap();
        pass &= r.passed && r.checked > 0;
        detail.push(format!("{} {}/{}", r.suite, r.checked, if r.passed { "ok" } else { "bad" }));
    }
    let small = make_params([2, 2], [1, 1]).unwrap();
    let r = run_suite(&small, Suite::Counts, LOOP_CAP).unwrap();
    pass &= r.passed;
    detail.push(format!("counts at t=3 {}", if r.passed { "ok" } else { "bad" }));
    verdict(4, "oracle equivalences at t=(4,4)", pass, &detail.join(", "));
}

#[test]
fn criterion_05_strip_identities() {
    let params = make_params([4, 4], [1, 1]).unwrap();
    let closed = run_suite(&params, Suite::ClosedForm, LOOP_CAP).unwrap();
    let drift = run_suite(&params, Suite::StripDrift, LOOP_CAP).unwrap();
    let pass = closed.passed && drift.passed && closed.checked > 0;
    verdict(
        5,
        "strip corrector identities at t=(5,5)",
        pass,
        &format!(
            "closed form on {} pairs: {}; zero sums and pairing on {} checks: {}",
            closed.checked, closed.passed, drift.checked, drift.passed
        ),
    );
}

#[test]
fn criterion_06_loop_space_count() {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [1, 2] {
        let params = make_params([p, p], [1, 1]).unwrap();
        let formula = loop_space_size(&params);
        let brute = brute_force_loop_count(&params).unwrap();
        pass &= formula == brute.into();
        detail.push(format!("t={}: formula {formula}, brute force {brute}", p + 1));
    }
    verdict(6, "loop space size", pass, &detail.join(", "));
}

#[test]
fn criterion_07_strip_statistics() {
    let stats: Vec<_> = [10, 20, 40, 80]
        .iter()
        .map(|&p| {
            let params = make_params([p, p], [1, 1]).unwrap();
            strip_statistics(&params, 100_000, &[0.25], &mut run_rng(70, p as u32))
        })
        .collect();
    let r: Vec<f64> = stats.iter().map(|s| s.r_fraction[0]).collect();
    let ks: Vec<f64> = stats.iter().map(|s| s.ks_h).collect();
    let dj: Vec<f64> = stats.iter().map(|s| s.disjoint_fraction).collect();
    let pass = r.windows(2).all(|w| w[1] >= w[0])
        && r[3] > r[0]
        && ks.windows(2).all(|w| w[1] < w[0])
        && dj.windows(2).all(|w| w[1] > w[0]);
    verdict(7, "strip statistics trends", pass, &format!("width fraction {r:.4?}, KS {ks:.4?}, disjoint {dj:.4?}"));
}

#[test]
fn criterion_08_simplex_and_alternation() {
    let mut pass = true;
    let mut detail = Vec::new();
    for g in 1..=3u32 {
        let c = simplex_integral_check(g, 1_000_000, &mut run_rng(80, g));
        let ok = c.conditional.within(SE_BAND) && c.ordering.within(SE_BAND);
        pass &= ok;
        detail.push(format!(
            "g={g}: conditional {:.4}+-{:.4} (target {:.4}), ordering {:.6}+-{:.6} (target {:.6})",
            c.conditional.value, c.conditional.se, c.conditional.target, c.ordering.value, c.ordering.se, c.ordering.target
        ));
    }
    for (g, t, samples) in [(1i64, 200i64, 1000u64), (2, 200, 5000), (3, 800, 3000)] {
        let params = make_params([t - g, t - g], [g, g]).unwrap();
        let c = counting_constant_check(&params, samples, &mut run_rng(81, g as u32));
        pass &= c.alternating.within(SE_BAND);
        detail.push(format!(
            "g={g}: alternation {:.4}+-{:.4} (target {:.4})",
            c.alternating.value, c.alternating.se, c.alternating.target
        ));
    }
    verdict(8, "simplex integral and alternation", pass, &detail.join("; "));
}

#[test]
fn criterion_09_chain_consistency() {
    let params = make_params([3, 3], [1, 1]).unwrap();
    let graph = build_shape_graph(&params, LOOP_CAP).unwrap();
    let cfg = SimConfig { steps: 250_000, runs: 4, burn_in: 50 * graph.shape_count() as u64, seed: 90, batch: Some(1000) };
    let r = stationary_check(&graph, &cfg).unwrap();
    let pass = r.same_shape_z.abs() <= SE_BAND && r.max_abs_z <= SHAPE_BAND;
    verdict(
        9,
        "chain consistency at t=(4,4)",
        pass,
        &format!(
            "same shape {:.5}+-{:.5} vs {:.5}; largest |z| over {} shapes {:.2}",
            r.same_shape_fraction, r.same_shape_se, r.same_shape_exact, r.shape_count, r.max_abs_z
        ),
    );
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_torus-walk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("TORUS_WALK_THREADS", threads)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "{args:?} exited with {status}");
    std::fs::read(out).unwrap()
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let commands: &[&[&str]] = &[
        &["params", "--p", "3,3"],
        &["enumerate", "--p", "3,3"],
        &["graph", "--p", "3,3"],
        &["exact-sigma", "--p", "3,3"],
        &["sweep", "--p-list", "1,1;2,2;3,3", "--format", "csv"],
        &["simulate", "--p", "3,3", "--steps", "4000", "--runs", "3", "--seed", "5"],
        &["sample-loops", "--p", "10,10", "--samples", "2000", "--seed", "5"],
        &["verify", "--p", "2,2"],
        &["integral-check", "--g", "2", "--samples", "20000", "--family-samples", "50", "--family-t", "100", "--seed", "5"],
        &["render", "--p", "38,38", "--n", "2,2", "--shape", "random", "--seed", "7"],
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let a = run_cli(args, &dir.path().join(format!("{i}a")), "1");
        let b = run_cli(args, &dir.path().join(format!("{i}b")), "3");
        let same = a == b && !a.is_empty();
        pass &= same;
        detail.push(format!("{} {}", args[0], if same { "identical" } else { "differs" }));
    }
    verdict(10, "byte-identical artifacts", pass, &detail.join(", "));
}
