//! Down-step edge sets ("shapes"), the square condition, the map from height
//! functions to shapes and back, and the maps `phi`, `psi`, `pi12`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Edge, HeightFunction, TorusParams, Vertex, Q};
use crate::loops;

/// A set of torus edges, stored as a bitset over edge indices.
///
/// Shapes are ordered lexicographically by their sorted edge-index lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    bits: FixedBitSet,
    /// Edges per horizontal and per vertical line, read off row 0 and
    /// column 0. Only meaningful when every line has the same count.
    pub a: [u32; 2],
}

impl Ord for Shape {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits.ones().cmp(other.bits.ones())
    }
}

impl PartialOrd for Shape {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Shape {
    pub fn empty(params: &TorusParams) -> Shape {
        Shape { bits: FixedBitSet::with_capacity(params.edge_count()), a: [0, 0] }
    }

    pub fn from_bits(params: &TorusParams, bits: FixedBitSet) -> Shape {
        let mut s = Shape { bits, a: [0, 0] };
        s.a = s.line_count_pair(params);
        s
    }

    pub fn from_indices(params: &TorusParams, idx: impl IntoIterator<Item = usize>) -> Shape {
        let mut bits = FixedBitSet::with_capacity(params.edge_count());
        for i in idx {
            bits.insert(i);
        }
        Shape::from_bits(params, bits)
    }

    pub fn from_edges<'a>(params: &TorusParams, edges: impl IntoIterator<Item = &'a Edge>) -> Shape {
        Shape::from_indices(params, edges.into_iter().map(|&e| params.edge_index(e)))
    }

    fn line_count_pair(&self, params: &TorusParams) -> [u32; 2] {
        let row = (0..params.t[0]).filter(|&x| self.contains(params, Edge::new(x, 0, 1))).count();
        let col = (0..params.t[1]).filter(|&y| self.contains(params, Edge::new(0, y, 2))).count();
        [row as u32, col as u32]
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn contains(&self, params: &TorusParams, e: Edge) -> bool {
        self.bits.contains(params.edge_index(e))
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        self.bits.contains(idx)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn edges(&self, params: &TorusParams) -> Vec<Edge> {
        self.bits.ones().map(|i| params.edge(i)).collect()
    }

    pub fn is_disjoint(&self, other: &Shape) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn union(&self, params: &TorusParams, other: &Shape) -> Shape {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Shape::from_bits(params, bits)
    }

    /// The image under the torus translation `x -> x + (dx, dy)`.
    pub fn translate(&self, params: &TorusParams, dx: i64, dy: i64) -> Shape {
        let mut bits = FixedBitSet::with_capacity(params.edge_count());
        for i in self.bits.ones() {
            let e = params.edge(i);
            let base = params.translate(e.base, dx, dy);
            bits.insert(params.edge_index(Edge { base, dir: e.dir }));
        }
        Shape { bits, a: self.a }
    }

    /// Hex form of the bitset, least significant edge index first in each byte.
    pub fn to_hex(&self, params: &TorusParams) -> String {
        let nbytes = params.edge_count().div_ceil(8);
        let mut out = String::with_capacity(2 * nbytes);
        for b in 0..nbytes {
            let mut byte = 0u8;
            for k in 0..8 {
                let i = 8 * b + k;
                if i < params.edge_count() && self.bits.contains(i) {
                    byte |= 1 << k;
                }
            }
            write!(out, "{byte:02x}").unwrap();
        }
        out
    }

    pub fn from_hex(params: &TorusParams, hex: &str) -> Result<Shape> {
        let nbytes = params.edge_count().div_ceil(8);
        if hex.len() != 2 * nbytes {
            return Err(Error::Shape(format!("hex string must have {} digits", 2 * nbytes)));
        }
        let mut idx = Vec::new();
        for b in 0..nbytes {
            let byte = u8::from_str_radix(&hex[2 * b..2 * b + 2], 16)
                .map_err(|e| Error::Shape(format!("bad hex: {e}")))?;
            for k in 0..8 {
                if byte & (1 << k) != 0 {
                    idx.push(8 * b + k);
                }
            }
        }
        if idx.iter().any(|&i| i >= params.edge_count()) {
            return Err(Error::Shape("hex sets bits beyond the edge count".into()));
        }
        Ok(Shape::from_indices(params, idx))
    }
}

/// Serialized form: the sorted edge indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub edges: Vec<usize>,
}

impl From<&Shape> for ShapeRecord {
    fn from(s: &Shape) -> Self {
        ShapeRecord { edges: s.indices().collect() }
    }
}

/// JSON form of a height function: `f(0,0)` and the shape; the values are
/// rebuilt on load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightRecord {
    pub p: [u32; 2],
    pub n: [u32; 2],
    pub base: i64,
    pub shape: Vec<usize>,
}

impl HeightRecord {
    /// `None` when `f(0,0)` is not an integer.
    pub fn new(f: &HeightFunction) -> Option<Self> {
        let base = f.values[0];
        base.is_integer().then(|| HeightRecord {
            p: f.params.p,
            n: f.params.n,
            base: base.to_integer(),
            shape: nu(f).indices().collect(),
        })
    }

    pub fn to_height_function(&self) -> Result<HeightFunction> {
        let params = crate::lattice::make_params(self.p.map(i64::from), self.n.map(i64::from))?;
        if let Some(&bad) = self.shape.iter().find(|&&i| i >= params.edge_count()) {
            return Err(Error::Shape(format!("edge index {bad} out of range")));
        }
        let a = Shape::from_indices(&params, self.shape.iter().copied());
        reconstruct_from_shape(&params, &a, self.base)
    }
}

/// Square condition at a single vertex.
pub fn square_condition_at(params: &TorusParams, a: &Shape, x: Vertex) -> bool {
    let right = a.contains(params, Edge { base: x, dir: 1 }) as u8
        + a.contains(params, Edge { base: params.shift(x, 1, 1), dir: 2 }) as u8;
    let up = a.contains(params, Edge { base: x, dir: 2 }) as u8
        + a.contains(params, Edge { base: params.shift(x, 2, 1), dir: 1 }) as u8;
    right == up
}

pub fn square_condition(params: &TorusParams, a: &Shape) -> bool {
    (0..params.vertex_count()).all(|v| square_condition_at(params, a, params.vertex(v)))
}

/// Whether every horizontal line holds `counts[0]` edges and every vertical
/// line `counts[1]`.
pub fn line_counts_are(params: &TorusParams, a: &Shape, counts: [u32; 2]) -> bool {
    let rows = (0..params.t[1]).all(|y| {
        (0..params.t[0]).filter(|&x| a.contains(params, Edge::new(x, y, 1))).count() as u32 == counts[0]
    });
    let cols = (0..params.t[0]).all(|x| {
        (0..params.t[1]).filter(|&y| a.contains(params, Edge::new(x, y, 2))).count() as u32 == counts[1]
    });
    rows && cols
}

/// Membership in `N_{t,a}` for the given line-count vector.
pub fn is_member(params: &TorusParams, a: &Shape, counts: [u32; 2]) -> bool {
    line_counts_are(params, a, counts) && square_condition(params, a)
}

/// Membership in `N_{t,n}`: the shapes of height functions.
pub fn is_height_shape(params: &TorusParams, a: &Shape) -> bool {
    is_member(params, a, params.n)
}

/// The set of down steps of `f`.
pub fn nu(f: &HeightFunction) -> Shape {
    let params = &f.params;
    Shape::from_indices(
        params,
        (0..params.edge_count()).filter(|&i| f.sgn(params.edge(i)) < 0),
    )
}

/// The height function with down-step set `a` and `f(0,0) = base`, built row
/// 0 first and then column by column.
pub fn reconstruct_from_shape(params: &TorusParams, a: &Shape, base: i64) -> Result<HeightFunction> {
    if !is_height_shape(params, a) {
        return Err(Error::Shape("edge set is not the shape of a height function".into()));
    }
    let [t1, t2] = params.t;
    let mut values = vec![Q::from(0); params.vertex_count()];
    let step = |e: Edge| -> Q {
        let down = a.contains(params, e) as i64;
        -params.q[e.dir as usize - 1] + Q::from(1 - 2 * down)
    };
    values[0] = Q::from(base);
    for k in 0..t1 - 1 {
        let e = Edge::new(k, 0, 1);
        values[params.vertex_index(Vertex::new(k + 1, 0))] = values[params.vertex_index(e.base)] + step(e);
    }
    for k in 0..t1 {
        for l in 0..t2 - 1 {
            let e = Edge::new(k, l, 2);
            values[params.vertex_index(Vertex::new(k, l + 1))] = values[params.vertex_index(e.base)] + step(e);
        }
    }
    HeightFunction::new(params.clone(), values)
}

/// `f(x) - f(0)` summed over the torus; constant on shapes.
pub fn chi(params: &TorusParams, a: &Shape) -> Result<Q> {
    let f = reconstruct_from_shape(params, a, 0)?;
    Ok(f.values.iter().copied().sum())
}

/// First edge of `a` met when moving forward from `e` along its line.
pub fn phi(params: &TorusParams, a: &Shape, e: Edge) -> Result<Edge> {
    let len = params.t[e.dir as usize - 1] as i64;
    for k in 0..len {
        let f = Edge { base: params.shift(e.base, e.dir, k), dir: e.dir };
        if a.contains(params, f) {
            return Ok(f);
        }
    }
    Err(Error::Domain(format!("line through {e:?} holds no edge of the set")))
}

/// Next edge of `a` strictly after `e` along its line.
pub fn psi(params: &TorusParams, a: &Shape, e: Edge) -> Result<Edge> {
    if !a.contains(params, e) {
        return Err(Error::Domain(format!("{e:?} is not in the set")));
    }
    phi(params, a, Edge { base: params.shift(e.base, e.dir, 1), dir: e.dir })
}

/// The successor of `e` along the fracture loops of `a`.
pub fn pi12(params: &TorusParams, a: &Shape, e: Edge) -> Result<Edge> {
    if !a.contains(params, e) {
        return Err(Error::Domain(format!("{e:?} is not in the set")));
    }
    Ok(pi12_unchecked(params, a, e))
}

pub(crate) fn pi12_unchecked(params: &TorusParams, a: &Shape, e: Edge) -> Edge {
    let x = e.base;
    if e.dir == 1 {
        let turn = Edge { base: x, dir: 2 };
        if a.contains(params, turn) {
            turn
        } else {
            Edge { base: params.shift(x, 2, 1), dir: 1 }
        }
    } else {
        let turn = Edge { base: params.translate(x, -1, 1), dir: 1 };
        if a.contains(params, turn) {
            turn
        } else {
            Edge { base: params.shift(x, 1, -1), dir: 2 }
        }
    }
}

/// Inverse of [`pi12`].
pub fn pi21(params: &TorusParams, a: &Shape, e: Edge) -> Result<Edge> {
    if !a.contains(params, e) {
        return Err(Error::Domain(format!("{e:?} is not in the set")));
    }
    let y = e.base;
    Ok(if e.dir == 1 {
        let from_right = Edge { base: params.translate(y, 1, -1), dir: 2 };
        if a.contains(params, from_right) {
            from_right
        } else {
            Edge { base: params.shift(y, 2, -1), dir: 1 }
        }
    } else {
        let from_below = Edge { base: y, dir: 1 };
        if a.contains(params, from_below) {
            from_below
        } else {
            Edge { base: params.shift(y, 1, 1), dir: 2 }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaturalPartition {
    /// Orbits of `pi12`, each listed in traversal order starting from its
    /// smallest edge index.
    pub cycles: Vec<Vec<Edge>>,
}

pub fn natural_partition(params: &TorusParams, a: &Shape) -> NaturalPartition {
    let mut seen = FixedBitSet::with_capacity(params.edge_count());
    let mut cycles = Vec::new();
    for i in a.indices() {
        if seen.contains(i) {
            continue;
        }
        let first = params.edge(i);
        let mut cycle = vec![first];
        seen.insert(i);
        let mut e = pi12_unchecked(params, a, first);
        while e != first {
            seen.insert(params.edge_index(e));
            cycle.push(e);
            e = pi12_unchecked(params, a, e);
        }
        cycles.push(cycle);
    }
    NaturalPartition { cycles }
}

/// Complete list of `N_{t,n}` in canonical order, built from fracture loops.
pub fn enumerate_shapes(params: &TorusParams, loop_cap: u64) -> Result<Vec<Shape>> {
    loops::enumerate_shapes_via_loops(params, loop_cap)
}

/// Constrained search over edge subsets: line counts pruned as edges are
/// decided, square conditions checked once their four edges are known.
/// Independent of the loop machinery; meant for small tori.
pub fn enumerate_shapes_raw(params: &TorusParams, counts: [u32; 2]) -> Vec<Shape> {
    let ne = params.edge_count();
    // squares whose largest edge index is i
    let mut squares_at: Vec<Vec<Vertex>> = vec![Vec::new(); ne];
    for vi in 0..params.vertex_count() {
        let x = params.vertex(vi);
        let idx = [
            params.edge_index(Edge { base: x, dir: 1 }),
            params.edge_index(Edge { base: params.shift(x, 1, 1), dir: 2 }),
            params.edge_index(Edge { base: x, dir: 2 }),
            params.edge_index(Edge { base: params.shift(x, 2, 1), dir: 1 }),
        ];
        squares_at[*idx.iter().max().unwrap()].push(x);
    }
    let mut st = RawSearch {
        params,
        counts,
        squares_at,
        row: vec![0; params.t[1] as usize],
        col: vec![0; params.t[0] as usize],
        current: Shape::empty(params),
        out: Vec::new(),
    };
    st.go(0);
    st.out.sort();
    st.out
}

struct RawSearch<'a> {
    params: &'a TorusParams,
    counts: [u32; 2],
    squares_at: Vec<Vec<Vertex>>,
    row: Vec<u32>,
    col: Vec<u32>,
    current: Shape,
    out: Vec<Shape>,
}

impl RawSearch<'_> {
    fn go(&mut self, i: usize) {
        let p = self.params;
        if i == p.edge_count() {
            let mut s = self.current.clone();
            s.a = self.counts;
            self.out.push(s);
            return;
        }
        let e = p.edge(i);
        for take in [false, true] {
            let (line, len, cap) = if e.dir == 1 {
                (e.base.y as usize, p.t[0], self.counts[0])
            } else {
                (e.base.x as usize, p.t[1], self.counts[1])
            };
            let pos = if e.dir == 1 { e.base.x } else { e.base.y };
            let counter = if e.dir == 1 { &mut self.row[line] } else { &mut self.col[line] };
            *counter += take as u32;
            let c = *counter;
            // remaining slots on this line after position `pos`
            let remaining = len - 1 - pos;
            let feasible = c <= cap && c + remaining >= cap;
            if take {
                self.current.bits.insert(i);
            }
            if feasible && self.squares_at[i].iter().all(|&x| square_condition_at(p, &self.current, x)) {
                self.go(i + 1);
            }
            if take {
                self.current.bits.set(i, false);
            }
            let counter = if e.dir == 1 { &mut self.row[line] } else { &mut self.col[line] };
            *counter -= take as u32;
        }
    }
}

/// `A* = {(x, i) : x_i < n_i}`, the end point of the descent below.
pub fn canonical_shape(params: &TorusParams) -> Shape {
    Shape::from_indices(
        params,
        (0..params.edge_count()).filter(|&i| {
            let e = params.edge(i);
            let coord = if e.dir == 1 { e.base.x } else { e.base.y };
            coord < params.n[e.dir as usize - 1]
        }),
    )
}

/// One lowering move: the vertex `z` whose height drops by two relative to
/// the rest, and the resulting shape.
#[derive(Clone, Debug)]
pub struct DescentMove {
    pub z: Vertex,
    pub shape: Shape,
}

/// Walk from `a` to `A*` by lowering local maxima `z != 0`, each move
/// decreasing `chi` by 2. Returns the moves taken.
pub fn descend_to_canonical(params: &TorusParams, a: &Shape) -> Result<Vec<DescentMove>> {
    if !is_height_shape(params, a) {
        return Err(Error::Shape("not a height-function shape".into()));
    }
    let target = canonical_shape(params);
    let mut cur = a.clone();
    let mut moves = Vec::new();
    while cur != target {
        let z = find_lowerable_max(params, &cur)
            .ok_or_else(|| Error::Shape("no lowerable maximum found".into()))?;
        // g = f + 1 - 2 * 1_{x = z}: the four edges at z flip
        let mut next = cur.clone();
        for (e, v) in [
            (Edge { base: z, dir: 1 }, false),
            (Edge { base: z, dir: 2 }, false),
            (Edge { base: params.shift(z, 1, -1), dir: 1 }, true),
            (Edge { base: params.shift(z, 2, -1), dir: 2 }, true),
        ] {
            next.bits.set(params.edge_index(e), v);
        }
        moves.push(DescentMove { z, shape: next.clone() });
        cur = next;
    }
    Ok(moves)
}

/// The point `z != 0` with `(z,1),(z,2)` in `a` and `(z-e1,1),(z-e2,2)` not in
/// `a`, found from an edge `(y,i)` with `y_i != 0` and `(y-e_i,i)` outside `a`.
fn find_lowerable_max(params: &TorusParams, a: &Shape) -> Option<Vertex> {
    let start = a.indices().map(|i| params.edge(i)).find(|e| {
        let coord = if e.dir == 1 { e.base.x } else { e.base.y };
        coord != 0 && !a.contains(params, Edge { base: params.shift(e.base, e.dir, -1), dir: e.dir })
    })?;
    let y = start.base;
    let i = start.dir;
    let j = 3 - i;
    let len = params.t[j as usize - 1] as i64;
    let n = (0..len).find(|&k| a.contains(params, Edge { base: params.shift(y, j, k), dir: j }))?;
    let m = (0..len).find(|&k| !a.contains(params, Edge { base: params.shift(y, j, -(k + 1)), dir: j }))?;
    let z = if n > 0 { params.shift(y, j, n) } else { params.shift(y, j, -m) };
    let ok = a.contains(params, Edge { base: z, dir: 1 })
        && a.contains(params, Edge { base: z, dir: 2 })
        && !a.contains(params, Edge { base: params.shift(z, 1, -1), dir: 1 })
        && !a.contains(params, Edge { base: params.shift(z, 2, -1), dir: 2 })
        && z != Vertex::new(0, 0);
    ok.then_some(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_params;
    use crate::fixtures::{figure_shape, figure_values};

    #[test]
    fn figure_shape_and_table() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let f = HeightFunction::new(p.clone(), figure_values()).unwrap();
        let a = nu(&f);
        assert_eq!(a, figure_shape(&p));
        assert!(square_condition(&p, &a));
        assert_eq!(f.sgn(Edge::new(2, 0, 1)), -1);
        assert_eq!(f.sgn(Edge::new(0, 0, 1)), 1);
        assert_eq!(f.average_height(), Q::new(27, 8));
        assert_eq!(reconstruct_from_shape(&p, &a, 3).unwrap(), f);
        assert_eq!(nu(&f.shifted(1)), a);
        assert_eq!(f.shifted(1).average_height() - f.average_height(), Q::from(1));
    }

    #[test]
    fn square_condition_small_cases() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        assert!(square_condition(&p, &Shape::empty(&p)));
        let single = Shape::from_edges(&p, &[Edge::new(0, 0, 1)]);
        assert!(!square_condition_at(&p, &single, Vertex::new(0, 0)));
        assert!(!square_condition(&p, &single));
    }

    #[test]
    fn maps_on_figure_shape() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        assert_eq!(phi(&p, &a, Edge::new(0, 0, 1)).unwrap(), Edge::new(2, 0, 1));
        assert_eq!(phi(&p, &a, Edge::new(2, 0, 1)).unwrap(), Edge::new(2, 0, 1));
        assert_eq!(psi(&p, &a, Edge::new(2, 0, 1)).unwrap(), Edge::new(2, 0, 1));
        assert!(psi(&p, &a, Edge::new(0, 0, 1)).is_err());
        assert_eq!(pi12(&p, &a, Edge::new(2, 0, 1)).unwrap(), Edge::new(2, 1, 1));
        assert_eq!(pi12(&p, &a, Edge::new(2, 1, 1)).unwrap(), Edge::new(2, 1, 2));
        let part = natural_partition(&p, &a);
        assert_eq!(part.cycles.len(), 1);
        assert_eq!(part.cycles[0].len(), 8);
        assert!(phi(&p, &Shape::empty(&p), Edge::new(0, 0, 1)).is_err());
    }

    #[test]
    fn raw_enumeration_small() {
        let p = make_params([2, 2], [1, 1]).unwrap();
        let all = enumerate_shapes_raw(&p, p.n);
        assert!(all.iter().all(|s| is_height_shape(&p, s)));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all.contains(&canonical_shape(&p)));
    }

    #[test]
    fn descent_reaches_canonical() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        let moves = descend_to_canonical(&p, &a).unwrap();
        let mut prev = chi(&p, &a).unwrap();
        for m in &moves {
            let c = chi(&p, &m.shape).unwrap();
            assert_eq!(c, prev - 2);
            prev = c;
        }
        assert_eq!(moves.last().unwrap().shape, canonical_shape(&p));
        assert!(descend_to_canonical(&p, &canonical_shape(&p)).unwrap().is_empty());
    }

    #[test]
    fn height_record_round_trip() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let f = reconstruct_from_shape(&p, &figure_shape(&p), 5).unwrap();
        let rec = HeightRecord::new(&f).unwrap();
        assert_eq!(rec.base, 5);
        assert_eq!(rec.to_height_function().unwrap().values, f.values);
    }

    #[test]
    fn hex_round_trip() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let a = figure_shape(&p);
        assert_eq!(Shape::from_hex(&p, &a.to_hex(&p)).unwrap(), a);
    }
}
