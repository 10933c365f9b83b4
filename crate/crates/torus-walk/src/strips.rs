//! The strip corrector: a corrector built from the minimal strips of the
//! fracture loops, with the closed form of the corrected increment and the
//! reflection involution that makes its drift vanish.
//!
//! Coordinates: a point `(X, Y)` of the continuous torus has strip coordinate
//! `s = (X - 1/2) + k (Y - 1/2)` with `k = d2 t1 / (d1 t2)`, taken modulo
//! `c = t1 / d1`. Along a horizontal line `s` grows at unit rate, and each
//! strip `[lo, hi]` appears `d1` times per line.

use serde::{Deserialize, Serialize};

use crate::chain::y_volume;
use crate::error::{Error, Result};
use crate::lattice::{TorusParams, Vertex, Q};
use crate::loops::{from_loops, lifted_range, minimal_strip, mod_q, to_loops, Loop, Move, Strip};
use crate::neighbors::neighbors;
use crate::shapes::Shape;

/// Fracture loops of a shape together with their minimal strips.
#[derive(Clone, Debug)]
pub struct StripSystem {
    pub loops: Vec<Loop>,
    pub strips: Vec<Strip>,
}

impl StripSystem {
    pub fn new(params: &TorusParams, a: &Shape) -> StripSystem {
        let loops = to_loops(params, a);
        let strips = loops.iter().map(|l| minimal_strip(params, l)).collect();
        StripSystem { loops, strips }
    }

    /// Indices of the loops sorted by `h`.
    pub fn order_by_h(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.loops.len()).collect();
        idx.sort_by_key(|&i| self.strips[i].h);
        idx
    }

    /// The union of the strips as disjoint arcs `[lo, hi]` with `lo` in
    /// `[0, c)`, or `None` when it is the whole torus.
    pub fn union_arcs(&self, params: &TorusParams) -> Option<Vec<(Q, Q)>> {
        merge_arcs(self.strips.iter().copied(), params.strip_period())
    }
}

fn arc(s: Strip, c: Q) -> (Q, Q) {
    let lo = mod_q(s.h - s.r / 2, c);
    (lo, lo + s.r)
}

fn merge_arcs(strips: impl Iterator<Item = Strip>, c: Q) -> Option<Vec<(Q, Q)>> {
    let mut arcs: Vec<(Q, Q)> = Vec::new();
    for s in strips {
        if s.r >= c {
            return None;
        }
        arcs.push(arc(s, c));
    }
    arcs.sort();
    let mut merged: Vec<(Q, Q)> = Vec::new();
    for (lo, hi) in arcs {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    // the last arc may wrap onto the first ones
    while merged.len() > 1 {
        let last = *merged.last().unwrap();
        let first = merged[0];
        if last.1 >= first.0 + c {
            merged.pop();
            merged[0] = (last.0, last.1.max(first.1 + c));
        } else {
            break;
        }
    }
    if merged.iter().any(|&(lo, hi)| hi - lo >= c) {
        return None;
    }
    Some(merged)
}

/// Whether the strips of all loops of `a` and `b` are pairwise disjoint as
/// closed arcs.
pub fn in_p(params: &TorusParams, a: &Shape, b: &Shape) -> bool {
    let sa = StripSystem::new(params, a);
    let sb = StripSystem::new(params, b);
    strips_disjoint(params, sa.strips.iter().chain(&sb.strips).copied())
}

/// Whether the strips are pairwise disjoint as closed arcs.
pub fn strips_disjoint(params: &TorusParams, strips: impl Iterator<Item = Strip>) -> bool {
    let c = params.strip_period();
    let mut arcs = Vec::new();
    for s in strips {
        if s.r >= c {
            return false;
        }
        arcs.push(arc(s, c));
    }
    arcs.sort();
    let n = arcs.len();
    (0..n).all(|i| {
        let (_, hi) = arcs[i];
        let next = if i + 1 < n { arcs[i + 1].0 } else { arcs[0].0 + c };
        n == 1 || hi < next
    })
}

/// `|V| kappa(A)`: volume of the part of the strip union whose first hit to
/// the right is the union's boundary, minus the part whose first hit is a
/// fracture loop. Exact sweep over `Y`.
pub fn kappa_strip_volume(params: &TorusParams, a: &Shape) -> Q {
    let sys = StripSystem::new(params, a);
    let [t1, t2] = [params.t[0] as i64, params.t[1] as i64];
    let Some(arcs) = sys.union_arcs(params) else {
        // every ray meets a fracture first
        return Q::from(-(t1 * t2));
    };
    let c = params.strip_period();
    let k = params.strip_slope();
    let half = Q::new(1, 2);
    let d1 = params.d[0] as i64;
    let mut total = Q::from(0);
    for y in 0..t2 {
        // X positions of vertical fracture segments spanning (y + 1/2, y + 3/2)
        let mut fx: Vec<Q> = Vec::new();
        for l in &sys.loops {
            let mut v = l.start;
            for &m in &l.moves {
                if m == Move::Up && v.y as i64 == y {
                    fx.push(Q::from(v.x as i64) + half);
                }
                v = match m {
                    Move::Up => params.shift(v, 2, 1),
                    Move::Left => params.shift(v, 1, -1),
                };
            }
        }
        let ylo = Q::from(y) + half;
        let yhi = ylo + 1;
        let mut cuts = vec![ylo, yhi];
        for &(lo, hi) in &arcs {
            for e in [lo, hi] {
                for &xf in &fx {
                    // e + 1/2 - k (Y - 1/2) = xf + j c
                    let base = e + half - xf;
                    let jmin = ((base - k * (yhi - half)) / c).ceil().to_integer();
                    let jmax = ((base - k * (ylo - half)) / c).floor().to_integer();
                    for j in jmin..=jmax {
                        let yy = half + (base - Q::from(j) * c) / k;
                        if yy > ylo && yy < yhi {
                            cuts.push(yy);
                        }
                    }
                }
            }
        }
        cuts.sort();
        cuts.dedup();
        for w in cuts.windows(2) {
            let ym = (w[0] + w[1]) / 2;
            total += (w[1] - w[0]) * line_value(&arcs, &fx, ym, k, c, d1, t1);
        }
    }
    total
}

/// Signed length on the horizontal line at height `ym`.
fn line_value(arcs: &[(Q, Q)], fx: &[Q], ym: Q, k: Q, c: Q, d1: i64, t1: i64) -> Q {
    let half = Q::new(1, 2);
    let period = Q::from(t1);
    let mut sum = Q::from(0);
    for &(lo, hi) in arcs {
        for m in 0..d1 {
            let xlo = mod_q(lo + half - k * (ym - half) + Q::from(m) * c, period);
            let xhi = xlo + (hi - lo);
            let last = fx
                .iter()
                .flat_map(|&x| [x, x + period])
                .filter(|&x| x > xlo && x < xhi)
                .max();
            sum += match last {
                Some(x) => (xhi - x) - (x - xlo),
                None => xhi - xlo,
            };
        }
    }
    sum
}

/// `kappa(A)` of the strip corrector.
pub fn kappa_strip(params: &TorusParams, a: &Shape) -> Q {
    kappa_strip_volume(params, a) / Q::from(params.vertex_count() as i64)
}

/// Raster estimate of `|V| kappa(A)` on a grid of step `1 / per_unit`, and
/// the area of cells whose corners disagree with their centre.
pub fn kappa_strip_raster(params: &TorusParams, a: &Shape, per_unit: u32) -> (f64, f64) {
    let sys = StripSystem::new(params, a);
    let [t1, t2] = [params.t[0] as f64, params.t[1] as f64];
    let c = f(params.strip_period());
    let k = f(params.strip_slope());
    let arcs: Option<Vec<(f64, f64)>> = sys.union_arcs(params).map(|v| v.iter().map(|&(lo, hi)| (f(lo), f(hi))).collect());
    // vertical segments as (X, Y from)
    let mut segs: Vec<(f64, f64)> = Vec::new();
    for l in &sys.loops {
        for (v, m) in l.points(params).into_iter().zip(&l.moves) {
            if *m == Move::Up {
                segs.push((v.x as f64 + 0.5, v.y as f64 + 0.5));
            }
        }
    }
    let classify = |x: f64, y: f64| -> i8 {
        let Some(arcs) = &arcs else { return -1 };
        let s = (x - 0.5) + k * (y - 0.5);
        let s = s.rem_euclid(c);
        // distance to the right end of the arc containing s
        let mut exit = None;
        for &(lo, hi) in arcs {
            for shift in [0.0, c, -c] {
                if s + shift >= lo && s + shift <= hi {
                    exit = Some(hi - (s + shift));
                }
            }
        }
        let Some(exit) = exit else { return 0 };
        let hit = segs.iter().any(|&(sx, sy)| {
            let dy = (y - sy).rem_euclid(t2);
            if dy >= 1.0 {
                return false;
            }
            let dx = (sx - x).rem_euclid(t1);
            dx > 0.0 && dx < exit
        });
        if hit {
            -1
        } else {
            1
        }
    };
    let h = 1.0 / per_unit as f64;
    let (nx, ny) = (params.t[0] * per_unit, params.t[1] * per_unit);
    let mut sum = 0f64;
    let mut boundary = 0f64;
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let v = classify(x, y);
            sum += v as f64 * h * h;
            let corners = [(x - h / 2.0, y - h / 2.0), (x + h / 2.0, y - h / 2.0), (x - h / 2.0, y + h / 2.0), (x + h / 2.0, y + h / 2.0)];
            if corners.iter().any(|&(cx, cy)| classify(cx, cy) != v) {
                boundary += h * h;
            }
        }
    }
    (sum, boundary)
}

fn f(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// `z(A, B) + kappa(B) - kappa(A)` on `P`:
/// `2 (d1 / t1) sum_i (h(beta_i) - h(alpha_i)) - [h(alpha_1) < h(beta_1)] + [h(beta_1) < h(alpha_1)]`.
pub fn z_closed_form(params: &TorusParams, a: &Shape, b: &Shape) -> Result<Q> {
    if !in_p(params, a, b) {
        return Err(Error::Domain("strips of the pair are not pairwise disjoint".into()));
    }
    let sa = StripSystem::new(params, a);
    let sb = StripSystem::new(params, b);
    let mut ha: Vec<Q> = sa.strips.iter().map(|s| s.h).collect();
    let mut hb: Vec<Q> = sb.strips.iter().map(|s| s.h).collect();
    ha.sort();
    hb.sort();
    let sum: Q = hb.iter().sum::<Q>() - ha.iter().sum::<Q>();
    let mut v = Q::from(2) * Q::new(params.d[0] as i64, params.t[0] as i64) * sum;
    if ha[0] < hb[0] {
        v -= 1;
    } else {
        v += 1;
    }
    Ok(v)
}

/// `y(A, B) + kappa(B) - kappa(A)` computed from volumes, for disjoint
/// neighbours.
pub fn corrected_increment(params: &TorusParams, a: &Shape, b: &Shape, ka: Q, kb: Q) -> Result<Q> {
    Ok(y_volume(params, a, b)? + kb - ka)
}

/// Contact points of a loop with the lower and upper boundary of its strip:
/// the first such points in the loop's own order.
pub fn boundary_points(params: &TorusParams, l: &Loop) -> (Vertex, Vertex) {
    let (lo, hi) = lifted_range(params, l);
    let k = params.strip_slope();
    let mut cur = Q::from(l.start.x as i64) + Q::from(l.start.y as i64) * k;
    let pts = l.points(params);
    let (mut v, mut w) = (None, None);
    for (p, &m) in pts.iter().zip(&l.moves) {
        if cur == lo && v.is_none() {
            v = Some(*p);
        }
        if cur == hi && w.is_none() {
            w = Some(*p);
        }
        cur = match m {
            Move::Up => cur + k,
            Move::Left => cur - 1,
        };
    }
    (v.expect("range is attained"), w.expect("range is attained"))
}

/// `centre - beta` traversed backwards, with `centre = w + v` a sum of two
/// loop points.
pub fn reflect_loop(params: &TorusParams, l: &Loop, w: Vertex, v: Vertex) -> Loop {
    let cx = w.x as i64 + v.x as i64;
    let cy = w.y as i64 + v.y as i64;
    let start = params.wrap(cx - l.start.x as i64, cy - l.start.y as i64);
    let moves: Vec<Move> = l.moves.iter().rev().copied().collect();
    Loop { start, moves }.canonical(params)
}

/// The reflection involution on `{B : (A, B) in P}`: each loop of `B` lying
/// between consecutive loops `alpha_i`, `alpha_{i+1}` of `A` is rotated by a
/// half turn about the midpoint of the upper contact point of `alpha_i` and
/// the lower contact point of `alpha_{i+1}`.
pub fn tau(params: &TorusParams, a: &Shape, b: &Shape) -> Result<Shape> {
    if !in_p(params, a, b) {
        return Err(Error::Domain("tau is defined on pairs in P".into()));
    }
    let sa = StripSystem::new(params, a);
    let sb = StripSystem::new(params, b);
    let alpha = sa.order_by_h();
    let g = alpha.len();
    let contacts: Vec<(Vertex, Vertex)> = alpha.iter().map(|&i| boundary_points(params, &sa.loops[i])).collect();
    let mut images = Vec::with_capacity(g);
    for (j, l) in sb.loops.iter().enumerate() {
        let hb = sb.strips[j].h;
        // alpha_i is the last loop of A below beta circularly
        let i = match alpha.iter().rposition(|&ai| sa.strips[ai].h < hb) {
            Some(i) => i,
            None => g - 1,
        };
        let w = contacts[i].1;
        let v = contacts[(i + 1) % g].0;
        images.push(reflect_loop(params, l, w, v));
    }
    from_loops(params, &images)
}

/// One pair `(A, B)` of the involution check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauPair {
    pub b: String,
    pub tau_b: String,
    pub value: String,
    pub tau_value: String,
    pub sign_flip: bool,
    pub involution: bool,
    pub widths_kept: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauReport {
    pub a: String,
    /// Neighbours `B` of `A` with `(A, B)` in `P`.
    pub p_neighbors: usize,
    /// Exact sum of `y + kappa(B) - kappa(A)` over them.
    pub sum: String,
    pub closed_form_ok: bool,
    pub pairs: Vec<TauPair>,
    pub failure: Option<String>,
}

impl TauReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
            && self.sum == "0"
            && self.closed_form_ok
            && self.pairs.iter().all(|p| p.sign_flip && p.involution && p.widths_kept)
    }
}

/// Checks, for one shape `A`, that the corrected increments over its
/// `P`-neighbours sum to zero, match the closed form, and are paired with
/// opposite signs by `tau`, which must be an involution preserving widths.
pub fn verify_tau_involution(params: &TorusParams, a: &Shape, kappa: &mut dyn FnMut(&Shape) -> Q) -> TauReport {
    let ka = kappa(a);
    let mut report = TauReport {
        a: a.to_hex(params),
        p_neighbors: 0,
        sum: String::new(),
        closed_form_ok: true,
        pairs: Vec::new(),
        failure: None,
    };
    let mut sum = Q::from(0);
    let mut domain: Vec<Shape> = Vec::new();
    for m in neighbors(params, a) {
        if m.shape != *a && in_p(params, a, &m.shape) {
            domain.push(m.shape);
        }
    }
    report.p_neighbors = domain.len();
    let value_of = |b: &Shape, kappa: &mut dyn FnMut(&Shape) -> Q| -> Result<Q> {
        let v = corrected_increment(params, a, b, ka, kappa(b))?;
        Ok(v)
    };
    for b in &domain {
        let v = match value_of(b, kappa) {
            Ok(v) => v,
            Err(e) => {
                report.failure = Some(format!("volume formula: {e}"));
                return report;
            }
        };
        sum += v;
        match z_closed_form(params, a, b) {
            Ok(z) if z == v => {}
            _ => report.closed_form_ok = false,
        }
        let tb = match tau(params, a, b) {
            Ok(tb) => tb,
            Err(e) => {
                report.failure = Some(format!("tau image of {} is not a shape: {e}", b.to_hex(params)));
                return report;
            }
        };
        if !domain.contains(&tb) {
            report.failure = Some(format!("tau image of {} is not a P-neighbour", b.to_hex(params)));
            return report;
        }
        let tv = match value_of(&tb, kappa) {
            Ok(v) => v,
            Err(e) => {
                report.failure = Some(format!("volume formula: {e}"));
                return report;
            }
        };
        let back = tau(params, a, &tb).ok();
        let widths = |s: &Shape| {
            let mut w: Vec<Q> = StripSystem::new(params, s).strips.iter().map(|x| x.r).collect();
            w.sort();
            w
        };
        report.pairs.push(TauPair {
            b: b.to_hex(params),
            tau_b: tb.to_hex(params),
            value: v.to_string(),
            tau_value: tv.to_string(),
            sign_flip: tv == -v,
            involution: back.as_ref() == Some(b),
            widths_kept: widths(b) == widths(&tb),
        });
    }
    report.sum = sum.to_string();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    use crate::fixtures::figure_shape;
    use crate::lattice::make_params;
    use crate::shapes::enumerate_shapes;

    #[test]
    fn figure_kappa_matches_raster() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        let exact = kappa_strip_volume(&p, &a);
        let (raster, boundary) = kappa_strip_raster(&p, &a, 64);
        assert!((f(exact) - raster).abs() <= 2.0 * boundary);
        assert!(exact.abs() <= Q::from(16));
    }

    #[test]
    fn kappa_bounded_and_matches_raster_at_3x3() {
        let p = make_params([2, 2], [1, 1]).unwrap();
        for a in enumerate_shapes(&p, 1_000_000).unwrap() {
            let exact = kappa_strip(&p, &a);
            assert!(exact.abs() <= Q::from(1));
            let (raster, boundary) = kappa_strip_raster(&p, &a, 16);
            assert!((f(exact * 9) - raster).abs() <= 2.0 * boundary + 1e-9, "{exact} {raster} {boundary}");
        }
    }

    #[test]
    fn identical_shapes_are_not_in_p() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        assert!(!in_p(&p, &a, &a));
    }

    #[test]
    fn closed_form_and_tau_at_4x4() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let mut cache = std::collections::HashMap::new();
        let mut kappa = |s: &Shape| *cache.entry(s.clone()).or_insert_with(|| kappa_strip(&p, s));
        let mut pairs = 0;
        for a in enumerate_shapes(&p, 1_000_000).unwrap() {
            let r = verify_tau_involution(&p, &a, &mut kappa);
            assert!(r.passed(), "{r:?}");
            pairs += r.pairs.len();
        }
        assert!(pairs > 0);
    }
}
