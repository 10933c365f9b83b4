//! Simulation of the walk and sampling experiments on loops, gate walks and
//! the simplex integral.
//!
//! Every run `r` of a simulation draws from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `r`, so results do not depend on the worker count.
//! Batch sums are kept as integers and combined in run order.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ShapeGraph;
use crate::error::{Error, Result};
use crate::lattice::{TorusParams, Q};
use crate::loops::{from_loops, minimal_strip, sample_loop, sample_walk, Loop};
use crate::sampler::{NeighborSampler, SamplerStats};
use crate::shapes::{canonical_shape, reconstruct_from_shape, Shape};
use crate::strips::strips_disjoint;

/// Fewest batches accepted by the batch-means estimators.
pub const MIN_BATCHES: u64 = 10;

/// Position of the walk: `fhat = anchor + offset`, where `anchor = f(0)` and
/// `offset` is the average of `f - f(0)`, a function of the shape alone.
#[derive(Clone, Debug)]
pub struct WalkState {
    pub shape: Shape,
    pub anchor: i64,
    pub offset: Q,
}

impl WalkState {
    pub fn new(params: &TorusParams, shape: Shape, anchor: i64) -> Result<Self> {
        let offset = reconstruct_from_shape(params, &shape, 0)?.average_height();
        Ok(WalkState { shape, anchor, offset })
    }

    pub fn average_height(&self) -> Q {
        Q::from(self.anchor) + self.offset
    }
}

/// What a single step did.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo {
    pub same_shape: bool,
    /// `sum(delta)`; the average height moves by this over `|V|`.
    pub delta_sum: i64,
}

/// Moves to a uniformly chosen neighbour.
pub fn step_walk<R: Rng + ?Sized>(
    params: &TorusParams,
    state: &mut WalkState,
    rng: &mut R,
    stats: &mut SamplerStats,
) -> Result<StepInfo> {
    let mv = NeighborSampler::new(params, &state.shape)?.sample(rng, stats);
    let same_shape = mv.shape == state.shape;
    state.anchor += mv.delta0 as i64;
    if !same_shape {
        state.offset = reconstruct_from_shape(params, &mv.shape, 0)?.average_height();
        state.shape = mv.shape;
    }
    Ok(StepInfo { same_shape, delta_sum: mv.delta_sum })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Recorded steps per run, after burn-in.
    pub steps: u64,
    pub runs: u32,
    pub burn_in: u64,
    pub seed: u64,
    /// Batch length; `None` uses `floor(sqrt(steps))`.
    pub batch: Option<u64>,
}

impl SimConfig {
    pub fn batch_len(&self) -> u64 {
        self.batch.unwrap_or_else(|| ((self.steps as f64).sqrt() as u64).max(1))
    }

    pub fn batches_per_run(&self) -> u64 {
        self.steps / self.batch_len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.runs == 0 || self.batch == Some(0) {
            return Err(Error::Param("steps, runs and batch length must be positive".into()));
        }
        let total = self.batches_per_run() * self.runs as u64;
        if total < MIN_BATCHES {
            return Err(Error::Estimation(format!("{total} batches, need at least {MIN_BATCHES}")));
        }
        Ok(())
    }
}

/// `50 |S|` when the shape count is known, else `10^5`.
pub fn default_burn_in(shape_count: Option<u64>) -> u64 {
    shape_count.map_or(100_000, |s| 50 * s)
}

/// Generator of run `run` under root seed `seed`.
pub fn run_rng(seed: u64, run: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

struct RunTrace {
    /// Per batch: `sum(delta)` and the number of same-shape steps.
    sums: Vec<i64>,
    same: Vec<u64>,
    stats: SamplerStats,
}

fn simulate_run(
    params: &TorusParams,
    cfg: &SimConfig,
    run: u32,
    visit: &mut dyn FnMut(&Shape, u64),
) -> Result<RunTrace> {
    let mut rng = run_rng(cfg.seed, run);
    let mut stats = SamplerStats::default();
    let mut shape = canonical_shape(params);
    for _ in 0..cfg.burn_in {
        shape = NeighborSampler::new(params, &shape)?.sample(&mut rng, &mut stats).shape;
    }
    let b = cfg.batch_len();
    let nb = cfg.batches_per_run();
    let mut sums = Vec::with_capacity(nb as usize);
    let mut same = Vec::with_capacity(nb as usize);
    for j in 0..nb {
        let (mut s, mut c) = (0i64, 0u64);
        for _ in 0..b {
            let mv = NeighborSampler::new(params, &shape)?.sample(&mut rng, &mut stats);
            s += mv.delta_sum;
            if mv.shape == shape {
                c += 1;
            } else {
                shape = mv.shape;
            }
            visit(&shape, j);
        }
        sums.push(s);
        same.push(c);
    }
    Ok(RunTrace { sums, same, stats })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffusivityEstimate {
    pub p: [u32; 2],
    pub n: [u32; 2],
    pub t: [u32; 2],
    pub config: SimConfig,
    pub batch_len: u64,
    pub batches: u64,
    /// Batch-means estimate of `Var(Xhat_n) / n`.
    pub sigma2: f64,
    pub sigma2_se: f64,
    /// Mean increment of the average height per step.
    pub drift: f64,
    pub same_shape_fraction: f64,
    pub same_shape_se: f64,
    /// Accepted over proposed draws of the neighbour sampler.
    pub sampler_acceptance: f64,
    pub limit_value: String,
    pub gap: f64,
}

/// Diffusivity of the average height by batch means over independent runs.
pub fn estimate_diffusivity(params: &TorusParams, cfg: &SimConfig) -> Result<DiffusivityEstimate> {
    cfg.validate()?;
    let traces: Vec<RunTrace> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| simulate_run(params, cfg, r, &mut |_, _| {}))
        .collect::<Result<_>>()?;
    let nv = params.vertex_count() as f64;
    let b = cfg.batch_len();
    let xs: Vec<f64> = traces.iter().flat_map(|t| t.sums.iter().map(|&s| s as f64 / nv)).collect();
    let nb = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / (nb * b as f64);
    let sigma2 = xs.iter().map(|x| (x - mu * b as f64).powi(2)).sum::<f64>() / ((nb - 1.0) * b as f64);
    let fr: Vec<f64> = traces.iter().flat_map(|t| t.same.iter().map(|&c| c as f64 / b as f64)).collect();
    let (same_shape_fraction, same_shape_se) = mean_and_se(&fr);
    let (mut prop, mut acc) = (0u64, 0u64);
    for t in &traces {
        prop += t.stats.proposals;
        acc += t.stats.accepted;
    }
    let limit = 1.0 / (1.0 + 2.0 * params.g as f64);
    Ok(DiffusivityEstimate {
        p: params.p,
        n: params.n,
        t: params.t,
        config: cfg.clone(),
        batch_len: b,
        batches: xs.len() as u64,
        sigma2,
        sigma2_se: sigma2 * (2.0 / (nb - 1.0)).sqrt(),
        drift: mu,
        same_shape_fraction,
        same_shape_se,
        sampler_acceptance: acc as f64 / prop.max(1) as f64,
        limit_value: format!("1/{}", 1 + 2 * params.g),
        gap: (sigma2 - limit).abs(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationaryReport {
    pub shape_count: usize,
    pub batches: u64,
    pub max_abs_z: f64,
    /// Shape index and z-score of the worst shape.
    pub worst: (usize, f64),
    pub same_shape_fraction: f64,
    pub same_shape_se: f64,
    pub same_shape_exact: f64,
    pub same_shape_z: f64,
}

/// Compares visit frequencies with `pi(A) = (deg A + 2) / (|M| + |S|)`, and
/// the same-shape step frequency with `2|S| / (|M| + |S|)`. The standard
/// deviation of each frequency comes from its batch means.
pub fn stationary_check(graph: &ShapeGraph, cfg: &SimConfig) -> Result<StationaryReport> {
    cfg.validate()?;
    let params = &graph.params;
    let ns = graph.shape_count();
    let per_run: Vec<(RunTrace, Vec<f64>, Vec<f64>)> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let mut cur = vec![0u64; ns];
            let mut sum = vec![0f64; ns];
            let mut sq = vec![0f64; ns];
            let mut last = 0u64;
            let b = cfg.batch_len() as f64;
            let mut flush = |cur: &mut Vec<u64>| {
                for (i, c) in cur.iter_mut().enumerate() {
                    let f = *c as f64 / b;
                    sum[i] += f;
                    sq[i] += f * f;
                    *c = 0;
                }
            };
            let index: &HashMap<Shape, u32> = &graph.index;
            let trace = simulate_run(params, cfg, r, &mut |s, j| {
                if j != last {
                    flush(&mut cur);
                    last = j;
                }
                cur[index[s] as usize] += 1;
            })?;
            flush(&mut cur);
            Ok((trace, sum, sq))
        })
        .collect::<Result<_>>()?;
    let nb = (cfg.batches_per_run() * cfg.runs as u64) as f64;
    let total = graph.total_weight() as f64;
    let mut worst = (0usize, 0f64);
    for a in 0..ns {
        let s: f64 = per_run.iter().map(|r| r.1[a]).sum();
        let q: f64 = per_run.iter().map(|r| r.2[a]).sum();
        let mean = s / nb;
        let var = ((q - nb * mean * mean) / (nb - 1.0)).max(0.0);
        let pi = (graph.degree(a) + 2) as f64 / total;
        let sd = (var / nb).sqrt();
        let z = if sd > 0.0 { (mean - pi) / sd } else if mean == pi { 0.0 } else { f64::INFINITY };
        if z.abs() > worst.1.abs() {
            worst = (a, z);
        }
    }
    let b = cfg.batch_len() as f64;
    let fr: Vec<f64> = per_run.iter().flat_map(|r| r.0.same.iter().map(|&c| c as f64 / b)).collect();
    let (m, se) = mean_and_se(&fr);
    let exact = 2.0 * ns as f64 / total;
    Ok(StationaryReport {
        shape_count: ns,
        batches: nb as u64,
        max_abs_z: worst.1.abs(),
        worst,
        same_shape_fraction: m,
        same_shape_se: se,
        same_shape_exact: exact,
        same_shape_z: (m - exact) / se,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripStatistics {
    pub t: [u32; 2],
    pub d: [u32; 2],
    pub samples: u64,
    pub eps: Vec<f64>,
    /// Fraction of loops with `r / c <= eps`, `c = t1 / d1`.
    pub r_fraction: Vec<f64>,
    pub r_fraction_se: Vec<f64>,
    /// Kolmogorov-Smirnov distance of `h / c` from uniform on `[0, 1]`.
    pub ks_h: f64,
    /// Fraction of `2g`-tuples of loops with pairwise disjoint strips.
    pub disjoint_fraction: f64,
    pub disjoint_se: f64,
}

fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

fn q_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn binomial(k: u64, n: u64) -> (f64, f64) {
    let f = k as f64 / n as f64;
    (f, (f * (1.0 - f) / n as f64).sqrt())
}

/// Strip widths and centres of uniform loops. Each sample draws `2g` loops:
/// the first feeds the width and centre statistics, all of them the
/// disjointness frequency.
pub fn strip_statistics<R: Rng + ?Sized>(params: &TorusParams, samples: u64, eps: &[f64], rng: &mut R) -> StripStatistics {
    let c = q_f64(params.strip_period());
    let mut hits = vec![0u64; eps.len()];
    let mut hs = Vec::with_capacity(samples as usize);
    let mut disjoint = 0u64;
    for _ in 0..samples {
        let strips: Vec<_> = (0..2 * params.g).map(|_| minimal_strip(params, &sample_loop(params, rng))).collect();
        let r = q_f64(strips[0].r) / c;
        for (h, &e) in hits.iter_mut().zip(eps) {
            if r <= e {
                *h += 1;
            }
        }
        hs.push(q_f64(strips[0].h) / c);
        if strips_disjoint(params, strips.iter().copied()) {
            disjoint += 1;
        }
    }
    let (r_fraction, r_fraction_se) = hits.iter().map(|&h| binomial(h, samples)).unzip();
    let (disjoint_fraction, disjoint_se) = binomial(disjoint, samples);
    StripStatistics {
        t: params.t,
        d: params.d,
        samples,
        eps: eps.to_vec(),
        r_fraction,
        r_fraction_se,
        ks_h: ks_uniform(hs),
        disjoint_fraction,
        disjoint_se,
    }
}

/// Empirical probability that a uniform walk with `x` up and `y` down steps
/// stays in the gate `W_{x,y}(xy eps / (x + y))`.
pub fn gate_concentration_check<R: Rng + ?Sized>(x: u32, y: u32, eps: Q, samples: u64, rng: &mut R) -> f64 {
    let b = Q::from((x * y) as i64) * eps / Q::from((x + y) as i64);
    let inside = (0..samples).filter(|_| sample_walk(x, y, rng).in_gate(b)).count();
    inside as f64 / samples as f64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub target: f64,
}

impl Estimate {
    /// `|value - target|` in standard errors.
    pub fn z(&self) -> f64 {
        (self.value - self.target) / self.se
    }

    /// `|value - target| <= k se`; a zero standard error needs equality.
    pub fn within(&self, k: f64) -> bool {
        (self.value - self.target).abs() <= k * self.se
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimplexCheck {
    pub g: u32,
    pub samples: u64,
    /// `P(I1 < J1 < ... < Ig < Jg)`, target `1 / (2g)!`.
    pub ordering: Estimate,
    /// `E[(1 - 2 sum(J - I))^2 ; ordered]`, target `1 / (2g + 1)!`.
    pub joint: Estimate,
    /// The same conditioned on the ordering, target `1 / (2g + 1)`.
    pub conditional: Estimate,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Monte Carlo over uniform points of `[0, 1]^{2g}`.
pub fn simplex_integral_check<R: Rng + ?Sized>(g: u32, samples: u64, rng: &mut R) -> SimplexCheck {
    let mut hits = 0u64;
    let (mut s1, mut s2) = (0f64, 0f64);
    let mut u = vec![0f64; 2 * g as usize];
    for _ in 0..samples {
        for v in u.iter_mut() {
            *v = rng.gen::<f64>();
        }
        if u.windows(2).all(|w| w[0] < w[1]) {
            hits += 1;
            let gaps: f64 = u.chunks(2).map(|p| p[1] - p[0]).sum();
            let v = (1.0 - 2.0 * gaps).powi(2);
            s1 += v;
            s2 += v * v;
        }
    }
    let n = samples as f64;
    let (pf, pse) = binomial(hits, samples);
    let joint_mean = s1 / n;
    let joint_var = (s2 / n - joint_mean * joint_mean).max(0.0);
    let k = hits.max(2) as f64;
    let cond_mean = s1 / k;
    let cond_var = ((s2 - k * cond_mean * cond_mean) / (k - 1.0)).max(0.0);
    SimplexCheck {
        g,
        samples,
        ordering: Estimate { value: pf, se: pse, target: 1.0 / factorial(2 * g) },
        joint: Estimate { value: joint_mean, se: (joint_var / n).sqrt(), target: 1.0 / factorial(2 * g + 1) },
        conditional: Estimate { value: cond_mean, se: (cond_var / k).sqrt(), target: 1.0 / (2 * g + 1) as f64 },
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountingCheck {
    pub t: [u32; 2],
    pub g: u32,
    /// Tuples drawn, including those rejected for overlapping strips.
    pub attempts: u64,
    pub samples: u64,
    /// Probability that the two families alternate in the circular order of
    /// the strip centres, target `2 / C(2g, g)`.
    pub alternating: Estimate,
}

fn alternates(labels: &[bool]) -> bool {
    let n = labels.len();
    (0..n).all(|i| labels[i] != labels[(i + 1) % n])
}

/// Draws two families of `g` uniform loops each until `samples` tuples have
/// pairwise disjoint strips, and counts those whose families alternate.
pub fn counting_constant_check<R: Rng + ?Sized>(params: &TorusParams, samples: u64, rng: &mut R) -> CountingCheck {
    let g = params.g as usize;
    let (mut attempts, mut accepted, mut alt) = (0u64, 0u64, 0u64);
    while accepted < samples {
        attempts += 1;
        let loops: Vec<Loop> = (0..2 * g).map(|_| sample_loop(params, rng)).collect();
        let strips: Vec<_> = loops.iter().map(|l| minimal_strip(params, l)).collect();
        if !strips_disjoint(params, strips.iter().copied()) {
            continue;
        }
        accepted += 1;
        let mut order: Vec<usize> = (0..2 * g).collect();
        order.sort_by_key(|&i| strips[i].h);
        let labels: Vec<bool> = order.iter().map(|&i| i < g).collect();
        if alternates(&labels) {
            alt += 1;
        }
    }
    let (value, se) = binomial(alt, samples);
    let choose: f64 = (1..=g).map(|i| (g + i) as f64 / i as f64).product();
    CountingCheck {
        t: params.t,
        g: params.g,
        attempts,
        samples,
        alternating: Estimate { value, se, target: 2.0 / choose },
    }
}

/// A shape whose fracture loops are drawn uniformly from `K` and kept only
/// when together they are simple and pairwise disjoint. This is not the
/// stationary law of the walk.
pub fn random_shape<R: Rng + ?Sized>(params: &TorusParams, max_attempts: u64, rng: &mut R) -> Result<Shape> {
    for _ in 0..max_attempts {
        let loops: Vec<Loop> = (0..params.g).map(|_| sample_loop(params, rng)).collect();
        if let Ok(s) = from_loops(params, &loops) {
            return Ok(s);
        }
    }
    Err(Error::Budget { what: "random loop family".into(), needed: f64::INFINITY, cap: max_attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_params;
    use crate::loops::ZigZagWalk;
    use crate::neighbors::for_each_closed_set;
    use num_traits::Signed;

    #[test]
    fn step_moves_average_height_by_delta_mean() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let mut st = WalkState::new(&p, canonical_shape(&p), 0).unwrap();
        let mut rng = run_rng(5, 0);
        let mut stats = SamplerStats::default();
        let nv = p.vertex_count() as i64;
        for _ in 0..300 {
            let before = st.average_height();
            let info = step_walk(&p, &mut st, &mut rng, &mut stats).unwrap();
            let diff = st.average_height() - before;
            assert_eq!(diff, Q::new(info.delta_sum, nv));
            if info.same_shape {
                assert_eq!(diff.abs(), Q::from(1));
            } else {
                assert!(diff.abs() <= Q::from(1));
            }
            let f = reconstruct_from_shape(&p, &st.shape, st.anchor).unwrap();
            assert_eq!(f.average_height(), st.average_height());
        }
    }

    #[test]
    fn too_few_batches_is_an_error() {
        let p = make_params([2, 2], [1, 1]).unwrap();
        let cfg = SimConfig { steps: 16, runs: 1, burn_in: 0, seed: 1, batch: None };
        assert!(matches!(estimate_diffusivity(&p, &cfg), Err(Error::Estimation(_))));
    }

    #[test]
    fn simulation_is_reproducible() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let cfg = SimConfig { steps: 2000, runs: 3, burn_in: 100, seed: 9, batch: Some(100) };
        let a = serde_json::to_string(&estimate_diffusivity(&p, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&estimate_diffusivity(&p, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    fn all_walks(x: u32, y: u32) -> Vec<ZigZagWalk> {
        let n = (x + y) as usize;
        (0u32..1 << n)
            .filter(|m| m.count_ones() == x)
            .map(|m| ZigZagWalk::new(x, y, (0..n).map(|i| if m >> i & 1 == 1 { 1 } else { -1 }).collect()).unwrap())
            .collect()
    }

    #[test]
    fn gate_thresholds_by_enumeration() {
        // at x = y = 2 the alternating walks deviate by 1, the others by 2
        let w = all_walks(2, 2);
        assert_eq!(w.len(), 6);
        let dev: Vec<Q> = w.iter().map(|w| w.max_deviation()).collect();
        assert_eq!(dev.iter().filter(|&&d| d == Q::from(1)).count(), 4);
        assert_eq!(dev.iter().filter(|&&d| d == Q::from(2)).count(), 2);
        // x = y = 4: the largest deviation is x, so the gate at eps is certain
        // exactly when 2 eps >= 4, i.e. eps >= 2
        let w = all_walks(4, 4);
        let max = w.iter().map(|w| w.max_deviation()).max().unwrap();
        assert_eq!(max, Q::from(4));
        let b = |eps: Q| Q::from(16) * eps / Q::from(8);
        assert!(w.iter().all(|w| w.in_gate(b(Q::from(2)))));
        assert!(!w.iter().all(|w| w.in_gate(b(Q::from(1)))));
        let mut rng = run_rng(1, 0);
        assert_eq!(gate_concentration_check(4, 4, Q::from(2), 1000, &mut rng), 1.0);
    }

    #[test]
    fn gate_concentrates() {
        let mut rng = run_rng(2, 0);
        let small = gate_concentration_check(20, 20, Q::new(1, 2), 4000, &mut rng);
        let large = gate_concentration_check(200, 200, Q::new(1, 2), 4000, &mut rng);
        assert!(large > small, "{large} vs {small}");
    }

    #[test]
    fn simplex_small_g() {
        let mut rng = run_rng(3, 0);
        let c = simplex_integral_check(1, 200_000, &mut rng);
        for e in [&c.ordering, &c.joint, &c.conditional] {
            assert!(e.z().abs() < 4.0, "{e:?}");
        }
    }

    #[test]
    fn counting_single_pair_always_alternates() {
        let p = make_params([9, 9], [1, 1]).unwrap();
        let mut rng = run_rng(4, 0);
        let c = counting_constant_check(&p, 200, &mut rng);
        assert_eq!(c.alternating.value, 1.0);
        assert_eq!(c.alternating.target, 1.0);
        assert!(c.alternating.within(3.0));
    }

    #[test]
    fn random_shapes_are_valid() {
        let p = make_params([6, 6], [2, 2]).unwrap();
        let mut rng = run_rng(6, 0);
        for _ in 0..5 {
            let a = random_shape(&p, 100_000, &mut rng).unwrap();
            assert!(crate::shapes::is_height_shape(&p, &a));
        }
    }

    #[test]
    fn stationary_weights_match_closed_sets() {
        // deg + 2 counts the closed sets, the weight used by the stationary law
        let p = make_params([2, 2], [1, 1]).unwrap();
        let graph = crate::chain::build_shape_graph(&p, 1 << 20).unwrap();
        for (i, a) in graph.shapes.iter().enumerate() {
            let mut c = 0;
            for_each_closed_set(&p, a, &mut |_| c += 1);
            assert_eq!(c, graph.degree(i) + 2);
        }
    }
}
