//! Torus geometry, edges and lines, and rational height functions.
//!
//! Vertices are stored with canonical coordinates `0 <= x < t1`, `0 <= y < t2`
//! and indexed row-major (`y * t1 + x`). Edge `(x, i)` joins `x` and `x + e_i`
//! and has index `2 * vertex_index(x) + (i - 1)`.

use std::collections::VecDeque;

use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shapes::Shape;

pub type Q = Rational64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusParams {
    pub p: [u32; 2],
    pub n: [u32; 2],
    pub t: [u32; 2],
    pub q: [Q; 2],
    pub g: u32,
    pub d: [u32; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: u32,
    pub y: u32,
}

/// The edge `{base, base + e_dir}` with `dir` in `{1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub base: Vertex,
    pub dir: u8,
}

impl Vertex {
    pub const fn new(x: u32, y: u32) -> Self {
        Vertex { x, y }
    }
}

impl Edge {
    pub const fn new(x: u32, y: u32, dir: u8) -> Self {
        Edge { base: Vertex { x, y }, dir }
    }
}

pub fn make_params(p: [i64; 2], n: [i64; 2]) -> Result<TorusParams> {
    if p.iter().chain(n.iter()).any(|&v| v < 1) {
        return Err(Error::Param(format!(
            "p and n must have positive components, got p={p:?} n={n:?}"
        )));
    }
    if p.iter().chain(n.iter()).any(|&v| v > 1 << 20) {
        return Err(Error::Param(format!("components too large: p={p:?} n={n:?}")));
    }
    let p = [p[0] as u32, p[1] as u32];
    let n = [n[0] as u32, n[1] as u32];
    let t = [p[0] + n[0], p[1] + n[1]];
    let q = [
        Q::new(p[0] as i64 - n[0] as i64, t[0] as i64),
        Q::new(p[1] as i64 - n[1] as i64, t[1] as i64),
    ];
    let g = n[0].gcd(&n[1]);
    let d = [n[0] / g, n[1] / g];
    Ok(TorusParams { p, n, t, q, g, d })
}

impl TorusParams {
    pub fn vertex_count(&self) -> usize {
        (self.t[0] * self.t[1]) as usize
    }

    pub fn edge_count(&self) -> usize {
        2 * self.vertex_count()
    }

    /// Common denominator of all heights.
    pub fn height_denominator(&self) -> i64 {
        (self.t[0] as i64).lcm(&(self.t[1] as i64))
    }

    /// Number of steps of every fracture loop, `d2 t1 + d1 t2`.
    pub fn loop_len(&self) -> usize {
        (self.d[1] * self.t[0] + self.d[0] * self.t[1]) as usize
    }

    /// Circumference `t1 / d1` of the circle on which strip positions live.
    pub fn strip_period(&self) -> Q {
        Q::new(self.t[0] as i64, self.d[0] as i64)
    }

    /// Slope `d2 t1 / (d1 t2)` of the strip functional in the y direction.
    pub fn strip_slope(&self) -> Q {
        Q::new((self.d[1] * self.t[0]) as i64, (self.d[0] * self.t[1]) as i64)
    }

    pub fn vertex_index(&self, v: Vertex) -> usize {
        (v.y * self.t[0] + v.x) as usize
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        let t1 = self.t[0] as usize;
        Vertex::new((idx % t1) as u32, (idx / t1) as u32)
    }

    pub fn edge_index(&self, e: Edge) -> usize {
        2 * self.vertex_index(e.base) + (e.dir as usize - 1)
    }

    pub fn edge(&self, idx: usize) -> Edge {
        let v = self.vertex(idx / 2);
        Edge { base: v, dir: (idx % 2) as u8 + 1 }
    }

    /// Wrap arbitrary integer coordinates onto the torus.
    pub fn wrap(&self, x: i64, y: i64) -> Vertex {
        Vertex::new(
            x.rem_euclid(self.t[0] as i64) as u32,
            y.rem_euclid(self.t[1] as i64) as u32,
        )
    }

    /// `v + k e_dir`.
    pub fn shift(&self, v: Vertex, dir: u8, k: i64) -> Vertex {
        match dir {
            1 => self.wrap(v.x as i64 + k, v.y as i64),
            _ => self.wrap(v.x as i64, v.y as i64 + k),
        }
    }

    pub fn translate(&self, v: Vertex, dx: i64, dy: i64) -> Vertex {
        self.wrap(v.x as i64 + dx, v.y as i64 + dy)
    }

    /// Head `x + e_i` of the edge `(x, i)`.
    pub fn head(&self, e: Edge) -> Vertex {
        self.shift(e.base, e.dir, 1)
    }

    /// The line `{(x + k e_i, i)}` through `e`, starting at `e`.
    pub fn line(&self, e: Edge) -> Vec<Edge> {
        let len = self.t[e.dir as usize - 1] as i64;
        (0..len)
            .map(|k| Edge { base: self.shift(e.base, e.dir, k), dir: e.dir })
            .collect()
    }
}

/// A height function with exact rational values, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightFunction {
    pub params: TorusParams,
    pub values: Vec<Q>,
}

impl HeightFunction {
    /// Validates the step constraint, the integrality of `f(0,0)` and the
    /// denominators.
    pub fn new(params: TorusParams, values: Vec<Q>) -> Result<Self> {
        if values.len() != params.vertex_count() {
            return Err(Error::Param(format!(
                "expected {} values, got {}",
                params.vertex_count(),
                values.len()
            )));
        }
        if !values[0].is_integer() {
            return Err(Error::Param(format!("f(0,0) = {} is not an integer", values[0])));
        }
        let den = params.height_denominator();
        if let Some(v) = values.iter().find(|v| den % v.denom() != 0) {
            return Err(Error::Param(format!("denominator of {v} does not divide {den}")));
        }
        let f = HeightFunction { params, values };
        for idx in 0..f.params.edge_count() {
            let e = f.params.edge(idx);
            let step = f.at(f.params.head(e)) - f.at(e.base) + f.params.q[e.dir as usize - 1];
            if step != Q::from(1) && step != Q::from(-1) {
                return Err(Error::Param(format!("edge {e:?} has illegal step")));
            }
        }
        Ok(f)
    }

    pub fn at(&self, v: Vertex) -> Q {
        self.values[self.params.vertex_index(v)]
    }

    /// The sign `s` with `f(x + e_i) - f(x) = -q_i + s`.
    pub fn sgn(&self, e: Edge) -> i8 {
        let step = self.at(self.params.head(e)) - self.at(e.base) + self.params.q[e.dir as usize - 1];
        if step > Q::from(0) {
            1
        } else {
            -1
        }
    }

    pub fn average_height(&self) -> Q {
        let sum: Q = self.values.iter().copied().sum();
        sum / Q::from(self.params.vertex_count() as i64)
    }

    pub fn shifted(&self, c: i64) -> HeightFunction {
        HeightFunction {
            params: self.params.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// `f + delta` where `delta` is a `±1` vertex map.
    pub fn add_delta(&self, delta: &[i8]) -> HeightFunction {
        HeightFunction {
            params: self.params.clone(),
            values: self.values.iter().zip(delta).map(|(v, &d)| v + d as i64).collect(),
        }
    }
}

/// All `±1` maps `delta` with `nu(f + delta) = B` whenever `nu(f) = A`.
///
/// Both branches `delta(0) = +1` and `delta(0) = -1` are propagated over the
/// torus edges with `delta(x + e_i) - delta(x) = 2 (1_{(x,i) in A} - 1_{(x,i) in B})`.
/// The result is empty exactly when `A` and `B` are not neighbours.
pub fn neighbor_delta(params: &TorusParams, a: &Shape, b: &Shape) -> Vec<Vec<i8>> {
    let nv = params.vertex_count();
    let mut out = Vec::new();
    'branch: for start in [1i8, -1] {
        let mut delta = vec![0i8; nv];
        delta[0] = start;
        let mut queue = VecDeque::from([0usize]);
        while let Some(vi) = queue.pop_front() {
            let v = params.vertex(vi);
            for dir in [1u8, 2] {
                // forward along (v, dir)
                let e = Edge { base: v, dir };
                let jump = 2 * (a.contains(params, e) as i8 - b.contains(params, e) as i8);
                let w = params.vertex_index(params.head(e));
                let value = delta[vi] + jump;
                if !assign(&mut delta, w, value, &mut queue) {
                    continue 'branch;
                }
                // backward along (v - e_dir, dir)
                let prev = params.shift(v, dir, -1);
                let e = Edge { base: prev, dir };
                let jump = 2 * (a.contains(params, e) as i8 - b.contains(params, e) as i8);
                let w = params.vertex_index(prev);
                let value = delta[vi] - jump;
                if !assign(&mut delta, w, value, &mut queue) {
                    continue 'branch;
                }
            }
        }
        out.push(delta);
    }
    out
}

fn assign(delta: &mut [i8], w: usize, value: i8, queue: &mut VecDeque<usize>) -> bool {
    if value != 1 && value != -1 {
        return false;
    }
    if delta[w] == 0 {
        delta[w] = value;
        queue.push_back(w);
        true
    } else {
        delta[w] == value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_examples() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        assert_eq!(p.t, [4, 4]);
        assert_eq!(p.q, [Q::new(1, 2), Q::new(1, 2)]);
        assert_eq!((p.g, p.d), (1, [1, 1]));
        let p = make_params([38, 38], [2, 2]).unwrap();
        assert_eq!((p.t, p.g, p.d), ([40, 40], 2, [1, 1]));
        let p = make_params([1, 1], [1, 1]).unwrap();
        assert_eq!(p.q, [Q::from(0), Q::from(0)]);
        assert!(make_params([0, 1], [1, 1]).is_err());
        assert!(make_params([1, 1], [1, -2]).is_err());
    }

    #[test]
    fn invariants_hold_for_many_params() {
        for p1 in 1..6 {
            for n1 in 1..6 {
                for n2 in 1..6 {
                    let p = make_params([p1, 3], [n1, n2]).unwrap();
                    assert_eq!(p.d[0].gcd(&p.d[1]), 1);
                    for i in 0..2 {
                        assert_eq!(p.t[i], p.p[i] + p.n[i]);
                        assert_eq!(p.q[i] * Q::from(p.t[i] as i64), Q::from(p.p[i] as i64 - p.n[i] as i64));
                    }
                }
            }
        }
    }

    #[test]
    fn lines() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let l = p.line(Edge::new(0, 0, 1));
        assert_eq!(l, (0..4).map(|x| Edge::new(x, 0, 1)).collect::<Vec<_>>());
        let mut l2 = p.line(Edge::new(2, 0, 1));
        l2.sort();
        assert_eq!(l, l2);
        for idx in 0..p.edge_count() {
            let e = p.edge(idx);
            assert_eq!(p.edge_index(e), idx);
            assert_eq!(p.line(e).len(), p.t[e.dir as usize - 1] as usize);
        }
    }

    #[test]
    fn rejects_bad_values() {
        let p = make_params([1, 1], [1, 1]).unwrap();
        let bad = HeightFunction::new(p.clone(), vec![Q::from(0); 4]);
        assert!(bad.is_err());
        let ok = HeightFunction::new(p, vec![0.into(), 1.into(), 1.into(), 0.into()]);
        assert!(ok.is_ok());
    }
}
