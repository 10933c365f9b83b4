use torus_walk::chain::{build_shape_graph, exact_diffusivity, solve_corrector, SolveMode};
use torus_walk::make_params;
use torus_walk::montecarlo::{estimate_diffusivity, SimConfig};

#[test]
fn monte_carlo_matches_exact_at_t4() {
    let p = make_params([3, 3], [1, 1]).unwrap();
    let graph = build_shape_graph(&p, 1 << 22).unwrap();
    let k = solve_corrector(&graph, SolveMode::Rational).unwrap();
    let exact = exact_diffusivity(&graph, &k).sigma2_xhat;
    let cfg = SimConfig { steps: 100_000, runs: 2, burn_in: 50 * graph.shape_count() as u64, seed: 31, batch: None };
    let e = estimate_diffusivity(&p, &cfg).unwrap();
    assert!((e.sigma2 - exact).abs() <= 3.0 * e.sigma2_se, "{} +- {} vs {exact}", e.sigma2, e.sigma2_se);
    assert!(e.drift.abs() < 0.05);
}

#[test]
fn standard_error_scales_with_steps() {
    let p = make_params([2, 2], [1, 1]).unwrap();
    let cfg = |steps| SimConfig { steps, runs: 1, burn_in: 1000, seed: 32, batch: Some(200) };
    let a = estimate_diffusivity(&p, &cfg(100_000)).unwrap();
    let b = estimate_diffusivity(&p, &cfg(200_000)).unwrap();
    let ratio = a.sigma2_se / b.sigma2_se;
    assert!((ratio - 2f64.sqrt()).abs() < 0.2, "ratio {ratio}");
}
