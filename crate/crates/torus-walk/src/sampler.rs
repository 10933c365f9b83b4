//! Exact uniform sampling of a height-function neighbour on large tori.
//!
//! Neighbours correspond to closed sets `S` of the implication digraph (see
//! [`crate::neighbors`]). Arcs along edges outside `A` stay inside the
//! connected components of `(V, E \ A)`; arcs along edges of `A` may join
//! components. Within a component every row splits into runs between edges of
//! `A`, and a set closed under the in-component arcs meets each run in a
//! prefix. So each component is counted and sampled by a row transfer over
//! prefix lengths, independently, and the product proposal is accepted when
//! the arcs along `A` are respected. Accepted proposals are uniform over all
//! closed sets.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Edge, TorusParams, Vertex};
use crate::neighbors::{apply_delta, NeighborMove};
use crate::shapes::Shape;

/// Largest prefix-state count allowed in a single row of a component.
pub const STATE_CAP: usize = 1 << 16;

/// A run of consecutive vertices of one row, joined by edges outside `A`.
#[derive(Clone, Debug)]
struct Run {
    y: u32,
    start: u32,
    len: u32,
}

struct Component {
    /// Runs of each row, `rows[y]` indexes into `runs`.
    rows: Vec<Vec<usize>>,
    runs: Vec<Run>,
    /// Mixed-radix strides of the prefix-length state per row.
    strides: Vec<Vec<usize>>,
    sizes: Vec<usize>,
    /// For row `y` (towards `y + 1`): for run `j` of row `y + 1` and prefix
    /// length `m`, the smallest prefix lengths forced on the runs of row `y`.
    need: Vec<Vec<Vec<Vec<u32>>>>,
}

pub struct NeighborSampler<'a> {
    params: &'a TorusParams,
    shape: &'a Shape,
    comps: Vec<Component>,
    tables: Vec<CompTables>,
    /// Arcs along edges of `A`, `(from, to)` vertex indices.
    cross: Vec<(usize, usize)>,
    /// Row, run-in-row slot and position of each vertex.
    locate: Vec<(usize, usize, u32)>,
}

/// Statistics from a batch of draws.
#[derive(Clone, Copy, Debug, Default)]
pub struct SamplerStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl<'a> NeighborSampler<'a> {
    pub fn new(params: &'a TorusParams, shape: &'a Shape) -> Result<Self> {
        let [t1, t2] = params.t;
        let nv = params.vertex_count();
        let in_a = |x: u32, y: u32, dir: u8| shape.contains(params, Edge::new(x, y, dir));

        // runs per row
        let mut all_runs: Vec<Run> = Vec::new();
        let mut run_of = vec![usize::MAX; nv];
        for y in 0..t2 {
            let cuts: Vec<u32> = (0..t1).filter(|&x| in_a(x, y, 1)).collect();
            if cuts.is_empty() {
                return Err(Error::Shape(format!("row {y} has no down step")));
            }
            for (k, &c) in cuts.iter().enumerate() {
                let next = cuts[(k + 1) % cuts.len()];
                let start = (c + 1) % t1;
                let len = if next >= c { next - c } else { next + t1 - c };
                let len = if cuts.len() == 1 { t1 } else { len };
                let id = all_runs.len();
                for i in 0..len {
                    run_of[params.vertex_index(Vertex::new((start + i) % t1, y))] = id;
                }
                all_runs.push(Run { y, start, len });
            }
        }

        // components: union of runs via vertical edges outside A
        let mut parent: Vec<usize> = (0..all_runs.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut cross = Vec::new();
        for idx in 0..params.edge_count() {
            let e = params.edge(idx);
            let x = params.vertex_index(e.base);
            let h = params.vertex_index(params.head(e));
            if shape.contains_index(idx) {
                cross.push((x, h));
            } else if e.dir == 2 {
                let (a, b) = (find(&mut parent, run_of[x]), find(&mut parent, run_of[h]));
                parent[a] = b;
            }
        }
        let mut comp_of_root = std::collections::HashMap::new();
        let mut comp_runs: Vec<Vec<usize>> = Vec::new();
        for r in 0..all_runs.len() {
            let root = find(&mut parent, r);
            let c = *comp_of_root.entry(root).or_insert_with(|| {
                comp_runs.push(Vec::new());
                comp_runs.len() - 1
            });
            comp_runs[c].push(r);
        }

        let mut locate = vec![(0usize, 0usize, 0u32); nv];
        let mut comps = Vec::with_capacity(comp_runs.len());
        for (ci, members) in comp_runs.iter().enumerate() {
            let mut rows: Vec<Vec<usize>> = vec![Vec::new(); t2 as usize];
            let mut runs = Vec::new();
            for &r in members {
                let local = runs.len();
                runs.push(all_runs[r].clone());
                let y = all_runs[r].y as usize;
                rows[y].push(local);
            }
            for (y, row) in rows.iter().enumerate() {
                for (slot, &local) in row.iter().enumerate() {
                    let run = &runs[local];
                    for i in 0..run.len {
                        let v = params.vertex_index(Vertex::new((run.start + i) % t1, y as u32));
                        locate[v] = (ci, slot, i);
                    }
                }
            }
            let mut strides = Vec::with_capacity(t2 as usize);
            let mut sizes = Vec::with_capacity(t2 as usize);
            for row in &rows {
                let mut s = Vec::with_capacity(row.len());
                let mut total = 1usize;
                for &local in row {
                    s.push(total);
                    total = total.saturating_mul(runs[local].len as usize + 1);
                }
                if total > STATE_CAP {
                    return Err(Error::Budget {
                        what: "prefix states in one row of a component".into(),
                        needed: total as f64,
                        cap: STATE_CAP as u64,
                    });
                }
                strides.push(s);
                sizes.push(total);
            }
            comps.push(Component { rows, runs, strides, sizes, need: Vec::new() });
        }

        // forced prefix lengths along vertical edges outside A
        for (ci, comp) in comps.iter_mut().enumerate() {
            for y in 0..t2 as usize {
                let yn = (y + 1) % t2 as usize;
                let mut need_row = Vec::with_capacity(comp.rows[yn].len());
                for &local in &comp.rows[yn] {
                    let run = &comp.runs[local];
                    let mut cur = vec![0u32; comp.rows[y].len()];
                    let mut table = vec![cur.clone()];
                    for i in 0..run.len {
                        let x = (run.start + i) % t1;
                        if !in_a(x, y as u32, 2) {
                            let below = params.vertex_index(Vertex::new(x, y as u32));
                            let (c2, slot, pos) = locate[below];
                            debug_assert_eq!(c2, ci);
                            cur[slot] = cur[slot].max(pos + 1);
                        }
                        table.push(cur.clone());
                    }
                    need_row.push(table);
                }
                comp.need.push(need_row);
            }
        }

        let tables = comps.iter().map(CompTables::new).collect();
        Ok(NeighborSampler { params, shape, comps, tables, cross, locate })
    }

    pub fn component_count(&self) -> usize {
        self.comps.len()
    }

    /// Draw a uniform closed set as a `±1` map.
    pub fn sample_delta<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> Vec<i8> {
        loop {
            stats.proposals += 1;
            let prefixes: Vec<Vec<usize>> =
                self.comps.iter().zip(&self.tables).map(|(c, tab)| c.sample(tab, rng)).collect();
            let in_s = |v: usize| {
                let (ci, slot, pos) = self.locate[v];
                let comp = &self.comps[ci];
                let y = self.params.vertex(v).y as usize;
                let state = prefixes[ci][y];
                let m = (state / comp.strides[y][slot]) % (comp.runs[comp.rows[y][slot]].len as usize + 1);
                (pos as usize) < m
            };
            if self.cross.iter().all(|&(u, w)| !in_s(u) || in_s(w)) {
                stats.accepted += 1;
                return (0..self.params.vertex_count()).map(|v| if in_s(v) { 1 } else { -1 }).collect();
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> NeighborMove {
        let delta = self.sample_delta(rng, stats);
        NeighborMove {
            shape: apply_delta(self.params, self.shape, &delta),
            delta0: delta[0],
            delta_sum: delta.iter().map(|&d| d as i64).sum(),
        }
    }

    /// Number of proposals `prod_c Z_c` (an upper bound on `deg + 2`).
    pub fn proposal_count(&self) -> f64 {
        self.tables.iter().map(|t| t.total).product()
    }
}

/// Per-component cyclic weights `Z(s0)` for the states of row 0.
struct CompTables {
    z0: Vec<f64>,
    total: f64,
}

impl CompTables {
    fn new(c: &Component) -> Self {
        let z0: Vec<f64> = (0..c.sizes[0])
            .map(|s0| {
                let vs = c.forward(s0);
                vs.last().unwrap()[s0]
            })
            .collect();
        let total = z0.iter().sum();
        CompTables { z0, total }
    }
}

impl Component {
    fn t2(&self) -> usize {
        self.rows.len()
    }

    fn decode(&self, y: usize, state: usize, slot: usize) -> u32 {
        ((state / self.strides[y][slot]) % (self.runs[self.rows[y][slot]].len as usize + 1)) as u32
    }

    /// Smallest prefix vector forced on row `y` by state `tau` of row `y + 1`.
    fn forced(&self, y: usize, tau: usize) -> Vec<u32> {
        let yn = (y + 1) % self.t2();
        let mut need = vec![0u32; self.rows[y].len()];
        for slot in 0..self.rows[yn].len() {
            let m = self.decode(yn, tau, slot) as usize;
            for (k, v) in self.need[y][slot][m].iter().enumerate() {
                need[k] = need[k].max(*v);
            }
        }
        need
    }

    /// Vectors `v_y` for `y = 0..=t2` with `v_0 = e_{s0}`; `v_{t2}` lives on
    /// row 0 states again.
    fn forward(&self, s0: usize) -> Vec<Vec<f64>> {
        let t2 = self.t2();
        let mut out = Vec::with_capacity(t2 + 1);
        let mut v = vec![0f64; self.sizes[0]];
        v[s0] = 1.0;
        out.push(v);
        for y in 0..t2 {
            let yn = (y + 1) % t2;
            let suffix = self.suffix_sums(y, &out[y]);
            let next: Vec<f64> = (0..self.sizes[yn])
                .map(|tau| {
                    let need = self.forced(y, tau);
                    suffix[self.encode(y, &need)]
                })
                .collect();
            out.push(next);
        }
        out
    }

    fn encode(&self, y: usize, prefix: &[u32]) -> usize {
        prefix.iter().zip(&self.strides[y]).map(|(&m, &s)| m as usize * s).sum()
    }

    /// `suffix[s] = sum of v[s']` over `s' >= s` componentwise.
    fn suffix_sums(&self, y: usize, v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        for (slot, &stride) in self.strides[y].iter().enumerate() {
            let radix = self.runs[self.rows[y][slot]].len as usize + 1;
            for idx in (0..s.len()).rev() {
                if (idx / stride) % radix + 1 < radix {
                    s[idx] += s[idx + stride];
                }
            }
        }
        s
    }

    /// Uniform closed set of this component, as one state per row.
    fn sample<R: Rng + ?Sized>(&self, tab: &CompTables, rng: &mut R) -> Vec<usize> {
        let t2 = self.t2();
        let s0 = pick(&tab.z0, tab.total, rng);
        let vs = self.forward(s0);
        let mut states = vec![0usize; t2];
        states[0] = s0;
        // walk back from row t2 (= row 0, fixed to s0) to row 1
        let mut tau = s0;
        for y in (1..t2).rev() {
            let need = self.forced(y, tau);
            let weights: Vec<f64> = (0..self.sizes[y])
                .map(|s| {
                    let ok = (0..self.rows[y].len()).all(|slot| self.decode(y, s, slot) >= need[slot]);
                    if ok {
                        vs[y][s]
                    } else {
                        0.0
                    }
                })
                .collect();
            let total = weights.iter().sum();
            tau = pick(&weights, total, rng);
            states[y] = tau;
        }
        states
    }
}

fn pick<R: Rng + ?Sized>(w: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &x) in w.iter().enumerate() {
        if x > 0.0 {
            last = i;
            if u < x {
                return i;
            }
            u -= x;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_params;
    use crate::neighbors::{is_closed, neighbors};
    use crate::shapes::enumerate_shapes;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn draws_are_closed_and_cover_all_neighbours() {
        for (p, n) in [([2, 2], [1, 1]), ([3, 3], [1, 1]), ([2, 2], [2, 2]), ([3, 1], [1, 2])] {
            let params = make_params(p, n).unwrap();
            let shapes = enumerate_shapes(&params, 1_000_000).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for a in shapes.iter().take(8) {
                let sampler = NeighborSampler::new(&params, a).unwrap();
                let all = neighbors(&params, a);
                let mut stats = SamplerStats::default();
                let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
                for _ in 0..40 * all.len() {
                    let d = sampler.sample_delta(&mut rng, &mut stats);
                    assert!(is_closed(&params, a, &d));
                    *seen.entry(d.iter().map(|&x| (x > 0) as u8).collect()).or_default() += 1;
                }
                assert_eq!(seen.len(), all.len(), "p={p:?} n={n:?}");
                assert!(sampler.proposal_count() >= all.len() as f64 - 0.5);
            }
        }
    }
}
