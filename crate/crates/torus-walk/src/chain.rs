//! The shape graph, the increment functional `y`, the corrector and the exact
//! diffusivity of the average height.
//!
//! The walk moves from `f` to a uniformly chosen neighbour. On shapes this is
//! the kernel `P(A -> B) = 1 / (deg A + 2)` for each adjacent `B` and
//! `2 / (deg A + 2)` for staying, with stationary law proportional to
//! `deg A + 2`. Everything is invariant under torus translations, so the graph
//! is stored through one representative per translation orbit.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::solve_integer_system;
use crate::lattice::{neighbor_delta, Edge, TorusParams, Q};
use crate::loops::{minimal_strip, to_loops};
use crate::neighbors::for_each_closed_set;
use crate::neighbors::apply_delta;
use crate::shapes::{enumerate_shapes, natural_partition, psi, square_condition, NaturalPartition, Shape};
use crate::strips::in_p;

/// Default cap on `|S|` for exact rational solves.
pub const RATIONAL_CAP: usize = 20_000;

/// Neighbour of an orbit representative: shape index and `sum(delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adjacent {
    pub shape: u32,
    pub delta_sum: i32,
}

pub struct ShapeGraph {
    pub params: TorusParams,
    /// All shapes in canonical order.
    pub shapes: Vec<Shape>,
    pub index: HashMap<Shape, u32>,
    /// Orbit id of each shape; orbit 0 holds `shapes[0]`.
    pub orbit_of: Vec<u32>,
    /// Smallest member of each orbit.
    pub reps: Vec<u32>,
    pub orbit_sizes: Vec<u32>,
    /// Distinct neighbours `B != A` of each representative, sorted by index.
    pub adjacency: Vec<Vec<Adjacent>>,
}

impl ShapeGraph {
    pub fn shape_count(&self) -> usize {
        self.shapes.len()
    }

    pub fn degree_of_orbit(&self, o: usize) -> usize {
        self.adjacency[o].len()
    }

    /// `deg(A)` for any shape.
    pub fn degree(&self, shape: usize) -> usize {
        self.adjacency[self.orbit_of[shape] as usize].len()
    }

    /// `|M|`: ordered neighbour pairs including `(A, A)`.
    pub fn pair_count(&self) -> u64 {
        (0..self.reps.len())
            .map(|o| self.orbit_sizes[o] as u64 * (self.adjacency[o].len() as u64 + 1))
            .sum()
    }

    /// `sum_A (deg A + 2) = |M| + |S|`.
    pub fn total_weight(&self) -> u64 {
        self.pair_count() + self.shapes.len() as u64
    }

    /// Translation `(dx, dy)` taking the orbit representative of `shape` to it.
    pub fn translation_to(&self, shape: usize) -> (i64, i64) {
        let rep = &self.shapes[self.reps[self.orbit_of[shape] as usize] as usize];
        let [t1, t2] = self.params.t;
        for dy in 0..t2 as i64 {
            for dx in 0..t1 as i64 {
                if rep.translate(&self.params, dx, dy) == self.shapes[shape] {
                    return (dx, dy);
                }
            }
        }
        unreachable!("shape is in its orbit")
    }

    /// Neighbours of an arbitrary shape, by translating its representative's.
    pub fn neighbors_of(&self, shape: usize) -> Vec<Adjacent> {
        let o = self.orbit_of[shape] as usize;
        if self.reps[o] as usize == shape {
            return self.adjacency[o].clone();
        }
        let (dx, dy) = self.translation_to(shape);
        let mut out: Vec<Adjacent> = self.adjacency[o]
            .iter()
            .map(|adj| {
                let b = self.shapes[adj.shape as usize].translate(&self.params, dx, dy);
                Adjacent { shape: self.index[&b], delta_sum: adj.delta_sum }
            })
            .collect();
        out.sort_by_key(|a| a.shape);
        out
    }

    /// Whether the graph without self-loops is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.shapes.len();
        if n == 0 {
            return true;
        }
        // orbits are connected to each other through representatives; within an
        // orbit, translations by e1 and e2 must be reachable too, so search on
        // the full graph
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for adj in self.neighbors_of(a) {
                let b = adj.shape as usize;
                if !seen[b] {
                    seen[b] = true;
                    count += 1;
                    stack.push(b);
                }
            }
        }
        count == n
    }
}

pub fn build_shape_graph(params: &TorusParams, loop_cap: u64) -> Result<ShapeGraph> {
    let shapes = enumerate_shapes(params, loop_cap)?;
    build_graph_from_shapes(params, shapes)
}

pub fn build_graph_from_shapes(params: &TorusParams, shapes: Vec<Shape>) -> Result<ShapeGraph> {
    let index: HashMap<Shape, u32> = shapes.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
    let mut orbit_of = vec![u32::MAX; shapes.len()];
    let mut reps = Vec::new();
    let mut orbit_sizes = Vec::new();
    let [t1, t2] = params.t;
    for i in 0..shapes.len() {
        if orbit_of[i] != u32::MAX {
            continue;
        }
        let o = reps.len() as u32;
        reps.push(i as u32);
        let mut size = 0;
        for dy in 0..t2 as i64 {
            for dx in 0..t1 as i64 {
                let j = *index
                    .get(&shapes[i].translate(params, dx, dy))
                    .ok_or_else(|| Error::Shape("shape list is not closed under translation".into()))?
                    as usize;
                if orbit_of[j] == u32::MAX {
                    orbit_of[j] = o;
                    size += 1;
                }
            }
        }
        orbit_sizes.push(size);
    }
    let adjacency: Vec<Vec<Adjacent>> = reps
        .par_iter()
        .map(|&r| {
            let a = &shapes[r as usize];
            let mut adj = Vec::new();
            for_each_closed_set(params, a, &mut |delta| {
                let sum: i32 = delta.iter().map(|&d| d as i32).sum();
                if sum.unsigned_abs() as usize == delta.len() {
                    return;
                }
                let b = apply_delta(params, a, delta);
                adj.push(Adjacent { shape: index[&b], delta_sum: sum });
            });
            adj.sort_by_key(|x| x.shape);
            adj
        })
        .collect();
    Ok(ShapeGraph { params: params.clone(), shapes, index, orbit_of, reps, orbit_sizes, adjacency })
}

/// `y(A, B) = mean(delta)` for neighbouring distinct shapes.
pub fn y_direct(params: &TorusParams, a: &Shape, b: &Shape) -> Result<Q> {
    if a == b {
        return Err(Error::Domain("y is defined for distinct shapes".into()));
    }
    let deltas = neighbor_delta(params, a, b);
    let delta = deltas.first().ok_or_else(|| Error::Domain("shapes are not neighbours".into()))?;
    let sum: i64 = delta.iter().map(|&d| d as i64).sum();
    Ok(Q::new(sum, params.vertex_count() as i64))
}

/// `|V|^-1 sum_x (1[phi_C(x,1) in B] - 1[phi_C(x,1) in A])` with `C = A u B`,
/// for disjoint neighbours.
pub fn y_volume(params: &TorusParams, a: &Shape, b: &Shape) -> Result<Q> {
    if a == b || !a.is_disjoint(b) {
        return Err(Error::Domain("volume formula needs disjoint shapes".into()));
    }
    let c = a.union(params, b);
    let mut sum = 0i64;
    for vi in 0..params.vertex_count() {
        let e = Edge { base: params.vertex(vi), dir: 1 };
        let hit = crate::shapes::phi(params, &c, e)?;
        if b.contains(params, hit) {
            sum += 1;
        } else {
            sum -= 1;
        }
    }
    Ok(Q::new(sum, params.vertex_count() as i64))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntertwineResult {
    Neighbours(bool),
    /// The pair does not meet the hypotheses of the criterion.
    Inapplicable(String),
}

/// Disjoint `A`, `B` whose union satisfies the square condition and with each
/// of them closed under the loop successor of the union.
pub fn intertwine_hypotheses(params: &TorusParams, a: &Shape, b: &Shape) -> std::result::Result<Shape, String> {
    if !a.is_disjoint(b) {
        return Err("shapes share an edge".into());
    }
    let c = a.union(params, b);
    if !square_condition(params, &c) {
        return Err("union fails the square condition".into());
    }
    for (s, name) in [(a, "A"), (b, "B")] {
        for e in s.edges(params) {
            let next = crate::shapes::pi12_unchecked(params, &c, e);
            if !s.contains(params, next) {
                return Err(format!("{name} is not closed under the loop successor of the union"));
            }
        }
    }
    Ok(c)
}

/// Whether `psi_C` maps the partition of `A` onto the partition of `B`.
pub fn intertwine_psi(params: &TorusParams, a: &Shape, b: &Shape) -> IntertwineResult {
    let c = match intertwine_hypotheses(params, a, b) {
        Ok(c) => c,
        Err(why) => return IntertwineResult::Inapplicable(why),
    };
    let pa = natural_partition(params, a);
    let pb = natural_partition(params, b);
    let as_sets = |p: &NaturalPartition| -> Vec<Vec<Edge>> {
        let mut v: Vec<Vec<Edge>> = p
            .cycles
            .iter()
            .map(|cy| {
                let mut s = cy.clone();
                s.sort();
                s
            })
            .collect();
        v.sort();
        v
    };
    let mut images: Vec<Vec<Edge>> = Vec::new();
    for cy in &pa.cycles {
        let mut img: Vec<Edge> = cy.iter().map(|&e| psi(params, &c, e).expect("e in C")).collect();
        img.sort();
        img.dedup();
        images.push(img);
    }
    images.sort();
    IntertwineResult::Neighbours(images == as_sets(&pb))
}

/// With pairwise disjoint strips: the loops, sorted circularly by `h`, must
/// alternate between `A` and `B`.
pub fn intertwine_h_order(params: &TorusParams, a: &Shape, b: &Shape) -> IntertwineResult {
    if !in_p(params, a, b) {
        return IntertwineResult::Inapplicable("strips are not pairwise disjoint".into());
    }
    let mut hs: Vec<(Q, u8)> = to_loops(params, a)
        .iter()
        .map(|l| (minimal_strip(params, l).h, 0u8))
        .chain(to_loops(params, b).iter().map(|l| (minimal_strip(params, l).h, 1u8)))
        .collect();
    hs.sort();
    let alternate = hs.iter().enumerate().all(|(i, &(_, s))| s == hs[(i + 1) % hs.len()].1 ^ 1);
    IntertwineResult::Neighbours(alternate)
}

/// The criterion used by the pipeline: `h`-order when the strips are disjoint,
/// otherwise the `psi` form.
pub fn intertwine_neighbor_test(params: &TorusParams, a: &Shape, b: &Shape) -> IntertwineResult {
    match intertwine_h_order(params, a, b) {
        r @ IntertwineResult::Neighbours(_) => r,
        IntertwineResult::Inapplicable(_) => intertwine_psi(params, a, b),
    }
}

/// Corrector values per translation orbit, scaled by `|V|`.
#[derive(Clone, Debug)]
pub enum Corrector {
    /// `|V| kappa = numer[o] / denom`.
    Exact { numer: Vec<BigInt>, denom: BigInt },
    Float { values: Vec<f64>, residual: f64, iterations: usize },
}

impl Corrector {
    /// `|V| kappa` on the orbit, as a float.
    pub fn scaled_f64(&self, o: usize) -> f64 {
        match self {
            Corrector::Exact { numer, denom } => {
                BigRational::new(numer[o].clone(), denom.clone()).to_f64().unwrap_or(f64::NAN)
            }
            Corrector::Float { values, .. } => values[o],
        }
    }

    /// `kappa` on the orbit as an exact rational.
    pub fn exact(&self, graph: &ShapeGraph, o: usize) -> Option<BigRational> {
        match self {
            Corrector::Exact { numer, denom } => {
                Some(BigRational::new(numer[o].clone(), denom * BigInt::from(graph.params.vertex_count())))
            }
            Corrector::Float { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Corrector::Exact { .. })
    }
}

/// How the corrector system is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMode {
    /// Rational when `|S|` is at most the cap, iterative above.
    Auto { rational_cap: usize },
    Rational,
    Float,
}

impl Default for SolveMode {
    fn default() -> Self {
        SolveMode::Auto { rational_cap: RATIONAL_CAP }
    }
}

/// Neighbours of a representative grouped by target orbit and `|V| y`.
fn grouped(graph: &ShapeGraph, o: usize, y: &(dyn Fn(usize, &Adjacent) -> i64 + Sync)) -> Vec<(usize, i64, i64)> {
    let mut map: HashMap<(usize, i64), i64> = HashMap::new();
    for adj in &graph.adjacency[o] {
        *map.entry((graph.orbit_of[adj.shape as usize] as usize, y(o, adj))).or_insert(0) += 1;
    }
    let mut v: Vec<(usize, i64, i64)> = map.into_iter().map(|((ob, yv), c)| (ob, yv, c)).collect();
    v.sort_unstable();
    v
}

/// Reduced system on orbits, scaled by `|V|`: for the representative of
/// orbit `o`, `deg K_o - sum_B K_B = sum_B y`. Multiplying row `o` by the
/// orbit size makes it symmetric. Orbit 0 is pinned to 0 and dropped.
struct Reduced {
    n: usize,
    /// Sparse rows over orbits `1..=n`, as `(column, value)` with columns
    /// shifted down by one.
    rows: Vec<Vec<(usize, i64)>>,
    rhs: Vec<i64>,
}

impl Reduced {
    fn dense(&self) -> Vec<i64> {
        let mut m = vec![0i64; self.n * self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[i * self.n + j] += v;
            }
        }
        m
    }
}

fn reduced_system(graph: &ShapeGraph, y: &(dyn Fn(usize, &Adjacent) -> i64 + Sync)) -> Reduced {
    let k = graph.reps.len();
    let n = k.saturating_sub(1);
    let (rows, rhs): (Vec<Vec<(usize, i64)>>, Vec<i64>) = (1..k)
        .into_par_iter()
        .map(|o| {
            let w = graph.orbit_sizes[o] as i64;
            let mut row: HashMap<usize, i64> = HashMap::new();
            let mut b = 0i64;
            for (ob, yv, c) in grouped(graph, o, y) {
                b += w * yv * c;
                if ob == o {
                    continue;
                }
                *row.entry(o - 1).or_insert(0) += w * c;
                if ob != 0 {
                    *row.entry(ob - 1).or_insert(0) -= w * c;
                }
            }
            let mut row: Vec<(usize, i64)> = row.into_iter().collect();
            row.sort_unstable();
            (row, b)
        })
        .unzip();
    Reduced { n, rows, rhs }
}

/// Solve the martingale condition for the functional given by `y` (scaled by
/// `|V|`, per representative neighbour).
pub fn solve_corrector_with(
    graph: &ShapeGraph,
    y: &(dyn Fn(usize, &Adjacent) -> i64 + Sync),
    mode: SolveMode,
) -> Result<Corrector> {
    let sys = reduced_system(graph, y);
    let rational = match mode {
        SolveMode::Auto { rational_cap } => graph.shape_count() <= rational_cap,
        SolveMode::Rational => true,
        SolveMode::Float => false,
    };
    if rational {
        let (denom, sol) = solve_integer_system(sys.n, &sys.dense(), &sys.rhs)
            .ok_or(Error::Solver { residual: f64::INFINITY, iterations: 0 })?;
        let mut numer = vec![BigInt::zero()];
        numer.extend(sol);
        let k = Corrector::Exact { numer, denom };
        // the modular solve is checked against the original equations
        if drift_numerators_exact(graph, &k, y).iter().any(|r| !r.is_zero()) {
            return Err(Error::Solver { residual: f64::NAN, iterations: 0 });
        }
        Ok(k)
    } else {
        let (sol, residual, iterations) = conjugate_gradient(graph, &sys, y)?;
        let mut v = vec![0.0];
        v.extend(sol);
        Ok(Corrector::Float { values: v, residual, iterations })
    }
}

/// Corrector for the height increment `y(A, B) = mean(delta)`.
pub fn solve_corrector(graph: &ShapeGraph, mode: SolveMode) -> Result<Corrector> {
    solve_corrector_with(graph, &height_increment, mode)
}

fn height_increment(_: usize, adj: &Adjacent) -> i64 {
    adj.delta_sum as i64
}

/// Tolerance on the drift residual of the iterative solve.
pub const FLOAT_TOL: f64 = 1e-10;

/// Jacobi-preconditioned conjugate gradient on the symmetric reduced system,
/// stopped when the largest drift residual (in units of `kappa`) is below
/// [`FLOAT_TOL`].
fn conjugate_gradient(
    graph: &ShapeGraph,
    sys: &Reduced,
    y: &(dyn Fn(usize, &Adjacent) -> i64 + Sync),
) -> Result<(Vec<f64>, f64, usize)> {
    let n = sys.n;
    let nv = graph.params.vertex_count() as f64;
    let rows: Vec<Vec<(usize, f64)>> =
        sys.rows.iter().map(|r| r.iter().map(|&(j, v)| (j, v as f64)).collect()).collect();
    let b: Vec<f64> = sys.rhs.iter().map(|&v| v as f64).collect();
    let diag: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().filter(|e| e.0 == i).map(|e| e.1).sum())
        .collect();
    let matvec = |x: &[f64], out: &mut [f64]| {
        out.par_iter_mut().zip(&rows).for_each(|(o, row)| {
            *o = row.iter().map(|&(j, v)| v * x[j]).sum();
        });
    };
    let groups: Vec<Vec<(usize, i64, i64)>> = (0..graph.reps.len()).into_par_iter().map(|o| grouped(graph, o, y)).collect();
    let residual = |x: &[f64]| {
        let mut full = vec![0f64; n + 1];
        full[1..].copy_from_slice(x);
        drift_residual_grouped(graph, &groups, &full) / nv
    };
    let mut x = vec![0f64; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0f64; n];
    let max_iter = 20 * n + 1000;
    for it in 0..max_iter {
        if it % 10 == 0 {
            let res = residual(&x);
            if res < FLOAT_TOL {
                return Ok((x, res, it));
            }
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = residual(&x);
    if res < FLOAT_TOL {
        Ok((x, res, max_iter))
    } else {
        Err(Error::Solver { residual: res, iterations: max_iter })
    }
}

/// Largest `|sum_B (y + K_B - K_A)| / (deg + 2)` over representatives, with
/// `K = |V| kappa`.
fn drift_residual_grouped(graph: &ShapeGraph, groups: &[Vec<(usize, i64, i64)>], k: &[f64]) -> f64 {
    (0..graph.reps.len())
        .map(|o| {
            let s: f64 = groups[o].iter().map(|&(ob, yv, c)| c as f64 * (yv as f64 + k[ob] - k[o])).sum();
            s.abs() / (graph.adjacency[o].len() + 2) as f64
        })
        .fold(0.0, f64::max)
}

/// `denom * sum_B (y + K_B - K_A)` per orbit; all zero for an exact
/// corrector.
fn drift_numerators_exact(graph: &ShapeGraph, k: &Corrector, y: &(dyn Fn(usize, &Adjacent) -> i64 + Sync)) -> Vec<BigInt> {
    let Corrector::Exact { numer, denom } = k else {
        return Vec::new();
    };
    (0..graph.reps.len())
        .into_par_iter()
        .map(|o| {
            let mut s = BigInt::zero();
            for (ob, yv, c) in grouped(graph, o, y) {
                s += (denom * yv + &numer[ob] - &numer[o]) * c;
            }
            s
        })
        .collect()
}

/// Exact drift `sum_B P(A -> B) (y + kappa_B - kappa_A)` of every orbit, for
/// an exact corrector of the height increment.
pub fn drift_residuals_exact(graph: &ShapeGraph, k: &Corrector) -> Option<Vec<BigRational>> {
    let Corrector::Exact { denom, .. } = k else {
        return None;
    };
    let nv = BigInt::from(graph.params.vertex_count());
    Some(
        drift_numerators_exact(graph, k, &height_increment)
            .into_iter()
            .enumerate()
            .map(|(o, s)| BigRational::new(s, denom * &nv * BigInt::from(graph.adjacency[o].len() + 2)))
            .collect(),
    )
}

/// Largest drift residual, in units of `kappa`.
pub fn drift_residual(graph: &ShapeGraph, corrector: &Corrector) -> f64 {
    match corrector {
        Corrector::Exact { .. } => drift_residuals_exact(graph, corrector)
            .unwrap_or_default()
            .iter()
            .map(|r| r.abs().to_f64().unwrap_or(f64::NAN))
            .fold(0.0, f64::max),
        Corrector::Float { values, .. } => {
            let groups: Vec<_> = (0..graph.reps.len()).map(|o| grouped(graph, o, &height_increment)).collect();
            drift_residual_grouped(graph, &groups, values) / graph.params.vertex_count() as f64
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffusivityReport {
    pub p: [u32; 2],
    pub n: [u32; 2],
    pub t: [u32; 2],
    pub shape_count: usize,
    pub orbit_count: usize,
    /// `|M|`, ordered neighbour pairs including the diagonal.
    pub edge_count: u64,
    pub exact: bool,
    pub sigma2_y: f64,
    pub sigma2_y_exact: Option<String>,
    pub p_same_shape: String,
    pub sigma2_xhat: f64,
    pub sigma2_xhat_exact: Option<String>,
    pub limit_value: String,
    pub gap: f64,
    pub max_drift_residual: f64,
}

/// Stationary `sigma^2(Y)` with `Y` the corrected functional `y + kappa_B -
/// kappa_A`, as an exact rational.
pub fn sigma2_y_exact(graph: &ShapeGraph, corrector: &Corrector, y: &(dyn Fn(usize, &Adjacent) -> i64 + Sync)) -> Option<BigRational> {
    let Corrector::Exact { numer, denom } = corrector else {
        return None;
    };
    let nv = graph.params.vertex_count() as i64;
    let acc: BigInt = (0..graph.reps.len())
        .into_par_iter()
        .map(|o| {
            let mut row = BigInt::zero();
            for (ob, yv, c) in grouped(graph, o, y) {
                let v = denom * yv + &numer[ob] - &numer[o];
                row += &v * &v * c;
            }
            row * BigInt::from(graph.orbit_sizes[o])
        })
        .reduce(BigInt::zero, |a, b| a + b);
    let d = BigInt::from(graph.total_weight()) * BigInt::from(nv * nv) * denom * denom;
    Some(BigRational::new(acc, d))
}

/// `sigma^2(Y)` sums `(y + kappa_B - kappa_A)^2` over ordered pairs with
/// mass `1 / (|M| + |S|)` each, and `sigma^2(Xhat) = sigma^2(Y) + 2|S| / (|M| + |S|)`.
pub fn exact_diffusivity(graph: &ShapeGraph, corrector: &Corrector) -> DiffusivityReport {
    let params = &graph.params;
    let nv = params.vertex_count() as f64;
    let total = graph.total_weight();
    let s = graph.shape_count() as u64;
    let p_same = BigRational::new(BigInt::from(2 * s), BigInt::from(total));
    let limit = Q::new(1, 1 + 2 * params.g as i64);
    let (sigma_y, sy_exact, sx_exact) = match sigma2_y_exact(graph, corrector, &height_increment) {
        Some(sy) => {
            let sx = &sy + &p_same;
            (sy.to_f64().unwrap_or(f64::NAN), Some(sy.to_string()), Some(sx.to_string()))
        }
        None => {
            let acc: f64 = (0..graph.reps.len())
                .into_par_iter()
                .map(|o| {
                    let ko = corrector.scaled_f64(o);
                    let row: f64 = grouped(graph, o, &height_increment)
                        .iter()
                        .map(|&(ob, yv, c)| {
                            let v = yv as f64 + corrector.scaled_f64(ob) - ko;
                            c as f64 * v * v
                        })
                        .sum();
                    row * graph.orbit_sizes[o] as f64
                })
                .sum();
            (acc / (total as f64 * nv * nv), None, None)
        }
    };
    let sigma_x = sigma_y + p_same.to_f64().unwrap_or(f64::NAN);
    DiffusivityReport {
        p: params.p,
        n: params.n,
        t: params.t,
        shape_count: graph.shape_count(),
        orbit_count: graph.reps.len(),
        edge_count: graph.pair_count(),
        exact: corrector.is_exact(),
        sigma2_y: sigma_y,
        sigma2_y_exact: sy_exact,
        p_same_shape: p_same.to_string(),
        sigma2_xhat: sigma_x,
        sigma2_xhat_exact: sx_exact,
        limit_value: limit.to_string(),
        gap: (sigma_x - *limit.numer() as f64 / *limit.denom() as f64).abs(),
        max_drift_residual: drift_residual(graph, corrector),
    }
}

/// Stationary second moment of the corrected increment, summed directly over
/// every shape and every move including the two same-shape moves; equals
/// `sigma^2(Xhat)`.
pub fn direct_second_moment(graph: &ShapeGraph, corrector: &Corrector) -> f64 {
    let nv = graph.params.vertex_count() as f64;
    let total = graph.total_weight() as f64;
    let mut acc = 0f64;
    for a in 0..graph.shape_count() {
        let o = graph.orbit_of[a] as usize;
        let ka = corrector.scaled_f64(o);
        // every move has stationary mass 1 / total
        let mut s = 2.0; // f -> f + 1 and f -> f - 1
        for adj in graph.neighbors_of(a) {
            let kb = corrector.scaled_f64(graph.orbit_of[adj.shape as usize] as usize);
            let v = (adj.delta_sum as f64 + kb - ka) / nv;
            s += v * v;
        }
        acc += s;
    }
    acc / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_params;

    #[test]
    fn small_graphs_are_symmetric_and_connected() {
        for p in [[1, 1], [2, 2], [3, 3]] {
            let params = make_params(p, [1, 1]).unwrap();
            let g = build_shape_graph(&params, 1_000_000).unwrap();
            assert!(g.is_connected());
            for a in 0..g.shape_count() {
                for adj in g.neighbors_of(a) {
                    let back = g.neighbors_of(adj.shape as usize);
                    let rev = back.iter().find(|x| x.shape as usize == a).expect("symmetric");
                    assert_eq!(rev.delta_sum, -adj.delta_sum);
                }
            }
        }
    }

    #[test]
    fn zero_functional_gives_zero_corrector() {
        let params = make_params([2, 2], [1, 1]).unwrap();
        let g = build_shape_graph(&params, 1_000_000).unwrap();
        let k = solve_corrector_with(&g, &|_, _| 0, SolveMode::Rational).unwrap();
        match k {
            Corrector::Exact { numer, .. } => assert!(numer.iter().all(|x| x.is_zero())),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rational_and_float_agree() {
        let params = make_params([3, 3], [1, 1]).unwrap();
        let g = build_shape_graph(&params, 1_000_000).unwrap();
        let exact = solve_corrector(&g, SolveMode::Rational).unwrap();
        let float = solve_corrector(&g, SolveMode::Float).unwrap();
        let re = exact_diffusivity(&g, &exact);
        let rf = exact_diffusivity(&g, &float);
        assert!((re.sigma2_xhat - rf.sigma2_xhat).abs() < 1e-9);
        assert!(drift_residuals_exact(&g, &exact).unwrap().iter().all(|r| r.is_zero()));
        assert!((direct_second_moment(&g, &exact) - re.sigma2_xhat).abs() < 1e-12);
    }
}
