//! Fracture loops: monotone (up/left) closed paths on the half-integer grid,
//! the loop space `K`, minimal diagonal strips and the zig-zag parametrisation.
//!
//! A loop point is stored as the vertex `v`, standing for `v + (1/2, 1/2)`.
//! An `Up` move from `v` runs along the rotated edge `(v + e2, 1)`; a `Left`
//! move runs along `(v, 2)`.

use std::cmp::Ordering;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::{Signed, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Edge, TorusParams, Vertex, Q};
use crate::shapes::{natural_partition, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    Left,
    Up,
}

impl Move {
    pub fn as_char(self) -> char {
        match self {
            Move::Left => 'L',
            Move::Up => 'U',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Loop {
    pub start: Vertex,
    pub moves: Vec<Move>,
}

/// JSON form: start doubled to integers, moves as a `U`/`L` string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub start: [u32; 2],
    pub moves: String,
}

impl From<&Loop> for LoopRecord {
    fn from(l: &Loop) -> Self {
        LoopRecord {
            start: [2 * l.start.x + 1, 2 * l.start.y + 1],
            moves: l.moves.iter().map(|m| m.as_char()).collect(),
        }
    }
}

impl LoopRecord {
    pub fn to_loop(&self) -> Result<Loop> {
        if self.start.iter().any(|c| c % 2 == 0) {
            return Err(Error::Geometry("doubled start coordinates must be odd".into()));
        }
        let moves = self
            .moves
            .chars()
            .map(|c| match c {
                'U' => Ok(Move::Up),
                'L' => Ok(Move::Left),
                other => Err(Error::Geometry(format!("unknown move {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Loop { start: Vertex::new(self.start[0] / 2, self.start[1] / 2), moves })
    }
}

fn step(params: &TorusParams, v: Vertex, m: Move) -> Vertex {
    match m {
        Move::Up => params.shift(v, 2, 1),
        Move::Left => params.shift(v, 1, -1),
    }
}

fn edge_of(params: &TorusParams, v: Vertex, m: Move) -> Edge {
    match m {
        Move::Up => Edge { base: params.shift(v, 2, 1), dir: 1 },
        Move::Left => Edge { base: v, dir: 2 },
    }
}

impl Loop {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Points visited at integral times `0..len` (the start included once).
    pub fn points(&self, params: &TorusParams) -> Vec<Vertex> {
        let mut v = self.start;
        let mut out = Vec::with_capacity(self.moves.len());
        for &m in &self.moves {
            out.push(v);
            v = step(params, v, m);
        }
        out
    }

    /// The edges traversed, in order.
    pub fn edges(&self, params: &TorusParams) -> Vec<Edge> {
        let mut v = self.start;
        let mut out = Vec::with_capacity(self.moves.len());
        for &m in &self.moves {
            out.push(edge_of(params, v, m));
            v = step(params, v, m);
        }
        out
    }

    pub fn edge_bits(&self, params: &TorusParams) -> FixedBitSet {
        let mut bits = FixedBitSet::with_capacity(params.edge_count());
        for e in self.edges(params) {
            bits.insert(params.edge_index(e));
        }
        bits
    }

    /// Representative under rotation: lexicographically least move sequence,
    /// ties (periodic sequences) broken by the smallest start index.
    pub fn canonical(&self, params: &TorusParams) -> Loop {
        let n = self.moves.len();
        let pts = self.points(params);
        let mut best = 0usize;
        for k in 1..n {
            let ord = cmp_rotations(&self.moves, k, best);
            let better = match ord {
                Ordering::Less => true,
                Ordering::Equal => params.vertex_index(pts[k]) < params.vertex_index(pts[best]),
                Ordering::Greater => false,
            };
            if better {
                best = k;
            }
        }
        let mut moves = self.moves[best..].to_vec();
        moves.extend_from_slice(&self.moves[..best]);
        Loop { start: pts.get(best).copied().unwrap_or(self.start), moves }
    }

    pub fn is_canonical(&self, params: &TorusParams) -> bool {
        self.canonical(params) == *self
    }
}

fn cmp_rotations(m: &[Move], a: usize, b: usize) -> Ordering {
    let n = m.len();
    for i in 0..n {
        let o = m[(a + i) % n].cmp(&m[(b + i) % n]);
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// `|K| = t1 t2 C(n, d1 t2) / n` with `n = d2 t1 + d1 t2`.
pub fn loop_space_size(params: &TorusParams) -> BigUint {
    let n = params.loop_len() as u64;
    let k = (params.d[0] * params.t[1]) as u64;
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c * BigUint::from(params.vertex_count() as u64) / BigUint::from(n)
}

/// Valid move counts and closure.
pub fn is_in_k(params: &TorusParams, l: &Loop) -> bool {
    let ups = l.moves.iter().filter(|&&m| m == Move::Up).count();
    let lefts = l.moves.len() - ups;
    if ups != (params.d[0] * params.t[1]) as usize || lefts != (params.d[1] * params.t[0]) as usize {
        return false;
    }
    if l.start.x >= params.t[0] || l.start.y >= params.t[1] {
        return false;
    }
    let end = l.moves.iter().fold(l.start, |v, &m| step(params, v, m));
    end == l.start
}

/// The fracture loops of `a`, one per orbit of `pi12`, in canonical form and
/// sorted.
pub fn to_loops(params: &TorusParams, a: &Shape) -> Vec<Loop> {
    let mut out: Vec<Loop> = natural_partition(params, a)
        .cycles
        .iter()
        .map(|cycle| {
            let first = cycle[0];
            let start = if first.dir == 1 { params.shift(first.base, 2, -1) } else { first.base };
            let moves = cycle.iter().map(|e| if e.dir == 1 { Move::Up } else { Move::Left }).collect();
            Loop { start, moves }.canonical(params)
        })
        .collect();
    out.sort_by(|x, y| loop_order(params, x, y));
    out
}

pub fn loop_order(params: &TorusParams, x: &Loop, y: &Loop) -> Ordering {
    x.moves
        .cmp(&y.moves)
        .then(params.vertex_index(x.start).cmp(&params.vertex_index(y.start)))
}

/// How loops pass through points: straight up (`S -> N`) and straight left
/// (`E -> W`). A crossing is one straight-up and one straight-left pass at the
/// same point.
struct Passes {
    edges: FixedBitSet,
    straight_up: FixedBitSet,
    straight_left: FixedBitSet,
}

fn passes(params: &TorusParams, l: &Loop) -> std::result::Result<Passes, String> {
    let nv = params.vertex_count();
    let mut p = Passes {
        edges: FixedBitSet::with_capacity(params.edge_count()),
        straight_up: FixedBitSet::with_capacity(nv),
        straight_left: FixedBitSet::with_capacity(nv),
    };
    let pts = l.points(params);
    let n = l.moves.len();
    for (k, &m) in l.moves.iter().enumerate() {
        let e = params.edge_index(edge_of(params, pts[k], m));
        if p.edges.put(e) {
            return Err(format!("segment {:?} traversed twice", params.edge(e)));
        }
        let prev = l.moves[(k + n - 1) % n];
        let vi = params.vertex_index(pts[k]);
        match (prev, m) {
            (Move::Up, Move::Up) => {
                if p.straight_left.contains(vi) {
                    return Err(format!("self-crossing at {:?}", pts[k]));
                }
                p.straight_up.insert(vi);
            }
            (Move::Left, Move::Left) => {
                if p.straight_up.contains(vi) {
                    return Err(format!("self-crossing at {:?}", pts[k]));
                }
                p.straight_left.insert(vi);
            }
            _ => {}
        }
    }
    Ok(p)
}

/// Simple except possibly for touches (both passes turning).
pub fn simple_up_to_touches(params: &TorusParams, l: &Loop) -> bool {
    passes(params, l).is_ok()
}

/// No shared segment and no crossing between the two loops.
pub fn disjoint_up_to_touches(params: &TorusParams, a: &Loop, b: &Loop) -> bool {
    !shares_segment_or_crosses(params, a, b)
}

fn compatible(pa: &Passes, pb: &Passes) -> bool {
    pa.edges.is_disjoint(&pb.edges)
        && pa.straight_up.is_disjoint(&pb.straight_left)
        && pa.straight_left.is_disjoint(&pb.straight_up)
}

fn shares_segment_or_crosses(params: &TorusParams, a: &Loop, b: &Loop) -> bool {
    let ea = a.edge_bits(params);
    let eb = b.edge_bits(params);
    if !ea.is_disjoint(&eb) {
        return true;
    }
    let kinds = |l: &Loop| {
        let pts = l.points(params);
        let n = l.moves.len();
        let mut up = FixedBitSet::with_capacity(params.vertex_count());
        let mut left = FixedBitSet::with_capacity(params.vertex_count());
        for (k, &pt) in pts.iter().enumerate() {
            let vi = params.vertex_index(pt);
            match (l.moves[(k + n - 1) % n], l.moves[k]) {
                (Move::Up, Move::Up) => up.insert(vi),
                (Move::Left, Move::Left) => left.insert(vi),
                _ => {}
            }
        }
        (up, left)
    };
    let (ua, la) = kinds(a);
    let (ub, lb) = kinds(b);
    !ua.is_disjoint(&lb) || !la.is_disjoint(&ub)
}

/// First problem found in a loop family, if any.
fn joint_violation(params: &TorusParams, loops: &[&Loop]) -> Option<String> {
    let mut all: Vec<Passes> = Vec::with_capacity(loops.len());
    for l in loops {
        let p = match passes(params, l) {
            Ok(p) => p,
            Err(e) => return Some(e),
        };
        if let Some(j) = all.iter().position(|q| !compatible(q, &p)) {
            return Some(format!("loops {} and {} overlap or cross", j, all.len()));
        }
        all.push(p);
    }
    None
}

/// The shape whose fracture loops are `loops`.
pub fn from_loops(params: &TorusParams, loops: &[Loop]) -> Result<Shape> {
    let refs: Vec<&Loop> = loops.iter().collect();
    for (i, l) in loops.iter().enumerate() {
        if !is_in_k(params, l) {
            return Err(Error::Geometry(format!("loop {i} is not in the loop space")));
        }
    }
    if let Some(msg) = joint_violation(params, &refs) {
        return Err(Error::Geometry(msg));
    }
    let mut bits = FixedBitSet::with_capacity(params.edge_count());
    for l in loops {
        bits.union_with(&l.edge_bits(params));
    }
    Ok(Shape::from_bits(params, bits))
}

/// Minimal closed diagonal strip `{h - r/2 <= l <= h + r/2}` containing a loop,
/// with `l(x, y) = x + y d2 t1 / (d1 t2)` measured from `(1/2, 1/2)` on the
/// circle of length `t1 / d1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strip {
    pub h: Q,
    pub r: Q,
}

/// Lifted range `[lo, hi]` of the strip functional along the loop, starting
/// from the canonical value of the start point.
pub fn lifted_range(params: &TorusParams, l: &Loop) -> (Q, Q) {
    let k = params.strip_slope();
    let mut cur = Q::from(l.start.x as i64) + Q::from(l.start.y as i64) * k;
    let (mut lo, mut hi) = (cur, cur);
    for &m in &l.moves {
        cur = match m {
            Move::Up => cur + k,
            Move::Left => cur - 1,
        };
        lo = lo.min(cur);
        hi = hi.max(cur);
    }
    (lo, hi)
}

pub fn minimal_strip(params: &TorusParams, l: &Loop) -> Strip {
    let c = params.strip_period();
    let (lo, hi) = lifted_range(params, l);
    let r = hi - lo;
    if r >= c {
        return Strip { h: Q::from(0), r: c };
    }
    Strip { h: mod_q((lo + hi) / 2, c), r }
}

pub fn mod_q(x: Q, c: Q) -> Q {
    let k = (x / c).floor();
    x - k * c
}

/// A `±1` walk with `x` up-steps and `y` down-steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZigZagWalk {
    pub x: u32,
    pub y: u32,
    pub steps: Vec<i8>,
}

impl ZigZagWalk {
    pub fn new(x: u32, y: u32, steps: Vec<i8>) -> Result<Self> {
        let ups = steps.iter().filter(|&&s| s == 1).count();
        let downs = steps.iter().filter(|&&s| s == -1).count();
        if ups != x as usize || downs != y as usize || steps.len() != (x + y) as usize {
            return Err(Error::Param(format!("walk must have {x} up and {y} down steps")));
        }
        Ok(ZigZagWalk { x, y, steps })
    }

    pub fn partial_sums(&self) -> Vec<i64> {
        let mut s = 0i64;
        let mut out = vec![0];
        for &w in &self.steps {
            s += w as i64;
            out.push(s);
        }
        out
    }

    /// Largest `|w_k - k (x - y) / (x + y)|` over the walk.
    pub fn max_deviation(&self) -> Q {
        let n = (self.x + self.y) as i64;
        let drift = Q::new(self.x as i64 - self.y as i64, n);
        self.partial_sums()
            .iter()
            .enumerate()
            .map(|(k, &w)| (Q::from(w) - drift * k as i64).abs())
            .max()
            .unwrap_or_else(|| Q::from(0))
    }

    /// Membership in the gate set `W_{x,y}(b)`.
    pub fn in_gate(&self, b: Q) -> bool {
        self.max_deviation() <= b
    }
}

/// Image of `(start, w)`: `+1` becomes `Up`, `-1` becomes `Left`.
pub fn zeta(params: &TorusParams, start: Vertex, w: &ZigZagWalk) -> Result<Loop> {
    if w.x != params.d[0] * params.t[1] || w.y != params.d[1] * params.t[0] {
        return Err(Error::Param(format!(
            "walk signature ({}, {}) does not match ({}, {})",
            w.x,
            w.y,
            params.d[0] * params.t[1],
            params.d[1] * params.t[0]
        )));
    }
    let moves = w.steps.iter().map(|&s| if s > 0 { Move::Up } else { Move::Left }).collect();
    Ok(Loop { start, moves })
}

/// Uniform element of `K`: uniform start and uniformly shuffled steps.
pub fn sample_loop<R: Rng + ?Sized>(params: &TorusParams, rng: &mut R) -> Loop {
    let start = Vertex::new(rng.gen_range(0..params.t[0]), rng.gen_range(0..params.t[1]));
    let ups = (params.d[0] * params.t[1]) as usize;
    let mut moves = vec![Move::Up; ups];
    moves.resize(params.loop_len(), Move::Left);
    moves.shuffle(rng);
    Loop { start, moves }
}

/// Uniform walk with `x` up and `y` down steps.
pub fn sample_walk<R: Rng + ?Sized>(x: u32, y: u32, rng: &mut R) -> ZigZagWalk {
    let mut steps = vec![1i8; x as usize];
    steps.resize((x + y) as usize, -1);
    steps.shuffle(rng);
    ZigZagWalk { x, y, steps }
}

fn check_loop_budget(params: &TorusParams, cap: u64) -> Result<usize> {
    let size = loop_space_size(params);
    match size.to_u64() {
        Some(s) if s <= cap => Ok(s as usize),
        _ => Err(Error::Budget {
            what: format!("loop space for t={:?}, d={:?}", params.t, params.d),
            needed: size.to_f64().unwrap_or(f64::INFINITY),
            cap,
        }),
    }
}

/// All of `K` in canonical form and sorted, generated through `zeta`: each
/// walk that is its own least rotation, with the starts that are least among
/// the rotations preserving the walk.
pub fn enumerate_loop_space(params: &TorusParams, cap: u64) -> Result<Vec<Loop>> {
    let expected = check_loop_budget(params, cap)?;
    let n = params.loop_len();
    let ups = (params.d[0] * params.t[1]) as usize;
    let mut out = Vec::with_capacity(expected);
    let mut moves = vec![Move::Left; n];
    for_each_combination(n, ups, &mut |pos| {
        moves.iter_mut().for_each(|m| *m = Move::Left);
        for &i in pos {
            moves[i] = Move::Up;
        }
        if (1..n).any(|k| cmp_rotations(&moves, k, 0) == Ordering::Less) {
            return;
        }
        let periods: Vec<usize> = (1..n).filter(|&k| cmp_rotations(&moves, k, 0) == Ordering::Equal).collect();
        for vi in 0..params.vertex_count() {
            let l = Loop { start: params.vertex(vi), moves: moves.clone() };
            if !periods.is_empty() {
                let pts = l.points(params);
                if periods.iter().any(|&k| params.vertex_index(pts[k]) < vi) {
                    continue;
                }
            }
            out.push(l);
        }
    });
    out.sort_by(|x, y| loop_order(params, x, y));
    debug_assert_eq!(out.len(), expected);
    Ok(out)
}

/// Calls `f` with every increasing `k`-subset of `0..n`.
pub fn for_each_combination(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut pos: Vec<usize> = (0..k).collect();
    loop {
        f(&pos);
        let mut i = k;
        while i > 0 && pos[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        pos[i - 1] += 1;
        for j in i..k {
            pos[j] = pos[j - 1] + 1;
        }
    }
}

/// Cap on the number of loop families examined when `gcd n > 1`.
pub const FAMILY_WORK_CAP: f64 = 2e10;

/// `N_{t,n}` as the unions of `gcd n` loops from `K` that are pairwise
/// disjoint and simple up to touches.
pub fn enumerate_shapes_via_loops(params: &TorusParams, cap: u64) -> Result<Vec<Shape>> {
    let all = enumerate_loop_space(params, cap)?;
    let g = params.g as usize;
    let mut work = 1f64;
    for i in 0..g {
        work = work * (all.len() - i.min(all.len())) as f64 / (i + 1) as f64;
    }
    if work > FAMILY_WORK_CAP {
        return Err(Error::Budget {
            what: format!("{g}-families of loops for t={:?}", params.t),
            needed: work,
            cap: FAMILY_WORK_CAP as u64,
        });
    }
    let simple: Vec<(usize, Passes)> = all
        .iter()
        .enumerate()
        .filter_map(|(i, l)| passes(params, l).ok().map(|p| (i, p)))
        .collect();
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(g);
    families(&simple, g, 0, &mut chosen, &mut |fam| {
        let mut bits = FixedBitSet::with_capacity(params.edge_count());
        for &j in fam {
            bits.union_with(&simple[j].1.edges);
        }
        out.push(Shape::from_bits(params, bits));
    });
    out.sort();
    Ok(out)
}

fn families(
    simple: &[(usize, Passes)],
    g: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == g {
        emit(chosen);
        return;
    }
    for j in from..simple.len() {
        if chosen.iter().all(|&c| compatible(&simple[c].1, &simple[j].1)) {
            chosen.push(j);
            families(simple, g, j + 1, chosen, emit);
            chosen.pop();
        }
    }
}

/// Count of loops of `K` that are simple up to touches, without building
/// shapes.
pub fn count_simple(params: &TorusParams, loops: &[Loop]) -> usize {
    loops.iter().filter(|l| simple_up_to_touches(params, l)).count()
}

impl std::fmt::Display for Loop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}+1/2,{}+1/2):", self.start.x, self.start.y)?;
        for m in &self.moves {
            write!(f, "{}", m.as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure_shape;
    use crate::lattice::make_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn figure_loop() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        let ls = to_loops(&p, &a);
        assert_eq!(ls.len(), 1);
        let l = &ls[0];
        assert_eq!(l.len(), 8);
        assert_eq!(l.moves.iter().filter(|&&m| m == Move::Left).count(), 4);
        assert!(is_in_k(&p, l));
        assert_eq!(from_loops(&p, &ls).unwrap(), a);
    }

    #[test]
    fn k_membership() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let mut moves = vec![Move::Up; 4];
        moves.extend(vec![Move::Left; 5]);
        assert!(!is_in_k(&p, &Loop { start: Vertex::new(0, 0), moves }));
        let moves = vec![Move::Up, Move::Left, Move::Up];
        assert!(!is_in_k(&p, &Loop { start: Vertex::new(0, 0), moves }));
    }

    #[test]
    fn loop_space_sizes() {
        for (t, size) in [(2, 6u32), (3, 30), (4, 140), (5, 630)] {
            let p = make_params([t - 1, t - 1], [1, 1]).unwrap();
            assert_eq!(loop_space_size(&p), BigUint::from(size));
            let all = enumerate_loop_space(&p, 1_000_000).unwrap();
            assert_eq!(all.len(), size as usize);
            assert!(all.iter().all(|l| l.is_canonical(&p) && is_in_k(&p, l)));
        }
    }

    #[test]
    fn strip_examples() {
        let p = make_params([1, 1], [1, 1]).unwrap();
        let l = Loop { start: Vertex::new(0, 0), moves: vec![Move::Up, Move::Left, Move::Up, Move::Left] };
        // l values 0, 1, 0, 1, 0: r = 1 on a circle of length 2
        let s = minimal_strip(&p, &l);
        assert_eq!(s, Strip { h: Q::new(1, 2), r: Q::from(1) });
        let l = Loop { start: Vertex::new(0, 0), moves: vec![Move::Up, Move::Up, Move::Left, Move::Left] };
        assert_eq!(minimal_strip(&p, &l), Strip { h: Q::from(0), r: Q::from(2) });
    }

    #[test]
    fn zeta_and_sampling() {
        let p = make_params([3, 2], [1, 1]).unwrap();
        let w = ZigZagWalk::new(3, 4, vec![1, 1, 1, -1, -1, -1, -1]).unwrap();
        let l = zeta(&p, Vertex::new(1, 1), &w).unwrap();
        assert!(is_in_k(&p, &l));
        let bad = ZigZagWalk::new(2, 5, vec![1, 1, -1, -1, -1, -1, -1]).unwrap();
        assert!(zeta(&p, Vertex::new(0, 0), &bad).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(is_in_k(&p, &sample_loop(&p, &mut rng)));
        }
    }

    #[test]
    fn combinations() {
        let mut count = 0;
        for_each_combination(6, 3, &mut |_| count += 1);
        assert_eq!(count, 20);
        let mut count = 0;
        for_each_combination(4, 0, &mut |_| count += 1);
        assert_eq!(count, 1);
    }
}
