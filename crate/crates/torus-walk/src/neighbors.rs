//! Height-function neighbours of a shape.
//!
//! For `g = f + delta` write `S = {delta = +1}`. The requirement that `g` is a
//! height function reads: for `(x, i)` in `A`, `x in S` forces `x + e_i in S`;
//! for `(x, i)` not in `A`, `x + e_i in S` forces `x in S`. So the neighbours
//! of `f` are the closed sets of this implication digraph, and the new shape is
//! `1_B = 1_A - (delta(x + e_i) - delta(x)) / 2`. The digraph is acyclic since
//! every arc lowers the lifted height by one.

use fixedbitset::FixedBitSet;

use crate::lattice::{Edge, TorusParams};
use crate::shapes::Shape;

/// Arcs `u -> v` meaning `u in S` forces `v in S`.
pub struct ImplicationGraph {
    pub succ: Vec<Vec<u32>>,
    pub pred: Vec<Vec<u32>>,
}

impl ImplicationGraph {
    pub fn new(params: &TorusParams, a: &Shape) -> Self {
        let nv = params.vertex_count();
        let mut succ = vec![Vec::with_capacity(2); nv];
        let mut pred = vec![Vec::with_capacity(2); nv];
        for idx in 0..params.edge_count() {
            let e = params.edge(idx);
            let x = params.vertex_index(e.base) as u32;
            let y = params.vertex_index(params.head(e)) as u32;
            let (u, v) = if a.contains_index(idx) { (x, y) } else { (y, x) };
            succ[u as usize].push(v);
            pred[v as usize].push(u);
        }
        ImplicationGraph { succ, pred }
    }
}

/// Calls `f(delta)` for every closed set, as a `±1` vertex map. The sets are
/// produced by branching on the first undecided vertex: include it with all
/// its descendants, or exclude it with all its ancestors. Every leaf is a
/// distinct closed set, so the cost is linear in the output.
pub fn for_each_closed_set(params: &TorusParams, a: &Shape, f: &mut dyn FnMut(&[i8])) {
    let graph = ImplicationGraph::new(params, a);
    let nv = params.vertex_count();
    let mut st = Search { graph: &graph, state: vec![0i8; nv], trail: Vec::with_capacity(nv), stack: Vec::new() };
    st.rec(0, f);
}

struct Search<'a> {
    graph: &'a ImplicationGraph,
    state: Vec<i8>,
    trail: Vec<u32>,
    stack: Vec<u32>,
}

impl Search<'_> {
    fn rec(&mut self, from: usize, f: &mut dyn FnMut(&[i8])) {
        let mut v = from;
        while v < self.state.len() && self.state[v] != 0 {
            v += 1;
        }
        if v == self.state.len() {
            f(&self.state);
            return;
        }
        for choice in [1i8, -1] {
            let mark = self.trail.len();
            self.force(v as u32, choice);
            self.rec(v + 1, f);
            while self.trail.len() > mark {
                let u = self.trail.pop().unwrap();
                self.state[u as usize] = 0;
            }
        }
    }

    fn force(&mut self, v: u32, choice: i8) {
        self.state[v as usize] = choice;
        self.trail.push(v);
        self.stack.push(v);
        while let Some(u) = self.stack.pop() {
            let next = if choice > 0 { &self.graph.succ[u as usize] } else { &self.graph.pred[u as usize] };
            for &w in next {
                if self.state[w as usize] == 0 {
                    self.state[w as usize] = choice;
                    self.trail.push(w);
                    self.stack.push(w);
                }
            }
        }
    }
}

/// Shape reached by moving from a height function with shape `a` by `delta`.
pub fn apply_delta(params: &TorusParams, a: &Shape, delta: &[i8]) -> Shape {
    let mut bits = FixedBitSet::with_capacity(params.edge_count());
    for idx in 0..params.edge_count() {
        let e: Edge = params.edge(idx);
        let x = params.vertex_index(e.base);
        let y = params.vertex_index(params.head(e));
        let val = a.contains_index(idx) as i8 - (delta[y] - delta[x]) / 2;
        if val == 1 {
            bits.insert(idx);
        }
    }
    let mut s = Shape::from_bits(params, bits);
    s.a = a.a;
    s
}

/// One neighbour: the new shape, `delta(0)` and `sum(delta)`.
#[derive(Clone, Debug)]
pub struct NeighborMove {
    pub shape: Shape,
    pub delta0: i8,
    pub delta_sum: i64,
}

/// All `deg(A) + 2` neighbours of a height function with shape `a`.
pub fn neighbors(params: &TorusParams, a: &Shape) -> Vec<NeighborMove> {
    let mut out = Vec::new();
    for_each_closed_set(params, a, &mut |delta| {
        out.push(NeighborMove {
            shape: apply_delta(params, a, delta),
            delta0: delta[0],
            delta_sum: delta.iter().map(|&d| d as i64).sum(),
        });
    });
    out
}

/// Number of closed sets, `deg(A) + 2`.
pub fn neighbor_count(params: &TorusParams, a: &Shape) -> u64 {
    let mut c = 0u64;
    for_each_closed_set(params, a, &mut |_| c += 1);
    c
}

/// Whether `delta` is closed for `a`.
pub fn is_closed(params: &TorusParams, a: &Shape, delta: &[i8]) -> bool {
    (0..params.edge_count()).all(|idx| {
        let e = params.edge(idx);
        let x = delta[params.vertex_index(e.base)];
        let y = delta[params.vertex_index(params.head(e))];
        if a.contains_index(idx) {
            !(x > 0 && y < 0)
        } else {
            !(y > 0 && x < 0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure_shape;
    use crate::lattice::{make_params, neighbor_delta};
    use crate::shapes::{enumerate_shapes_raw, is_height_shape};

    #[test]
    fn neighbours_are_valid_and_match_propagation() {
        let p = make_params([2, 2], [1, 1]).unwrap();
        let shapes = enumerate_shapes_raw(&p, p.n);
        for a in &shapes {
            let nb = neighbors(&p, a);
            let same: Vec<_> = nb.iter().filter(|m| m.shape == *a).collect();
            assert_eq!(same.len(), 2);
            for m in &nb {
                assert!(is_height_shape(&p, &m.shape));
                let deltas = neighbor_delta(&p, a, &m.shape);
                assert!(!deltas.is_empty());
            }
            let distinct: std::collections::HashSet<_> = nb.iter().map(|m| m.shape.clone()).collect();
            assert_eq!(distinct.len(), nb.len() - 1);
            for b in &shapes {
                let found = nb.iter().any(|m| m.shape == *b);
                assert_eq!(found, !neighbor_delta(&p, a, b).is_empty());
            }
        }
    }

    #[test]
    fn figure_shape_neighbours() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        let nb = neighbors(&p, &a);
        assert!(nb.len() > 2);
        assert_eq!(nb.len() as u64, neighbor_count(&p, &a));
    }
}
