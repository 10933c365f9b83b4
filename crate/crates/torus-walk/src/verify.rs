//! Exhaustive identity checks over every shape of a small torus.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::chain::{build_graph_from_shapes, drift_residuals_exact, intertwine_neighbor_test, solve_corrector, y_direct, y_volume, IntertwineResult, SolveMode};
use crate::error::{Error, Result};
use crate::lattice::{neighbor_delta, TorusParams, Q};
use crate::loops::{enumerate_loop_space, is_in_k, loop_space_size, Loop, Move};
use crate::neighbors::neighbors;
use crate::shapes::{enumerate_shapes, enumerate_shapes_raw, natural_partition, nu, pi12, pi21, reconstruct_from_shape, Shape};
use crate::strips::{kappa_strip_volume, verify_tau_involution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Intertwining criterion against the existence of a `±1` difference.
    NeighbourTest,
    /// Volume formula for `y` against the direct average of `delta`.
    Volume,
    /// Closed form of the strip-corrected increment.
    ClosedForm,
    /// Zero drift of the strip corrector and the pairing involution.
    StripDrift,
    /// Zero drift of the exact corrector.
    Corrector,
    /// Height functions and shapes, and the loop successor maps.
    Bijection,
    /// Shape and loop counts against brute force.
    Counts,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Bijection,
        Suite::Counts,
        Suite::NeighbourTest,
        Suite::Volume,
        Suite::ClosedForm,
        Suite::StripDrift,
        Suite::Corrector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::NeighbourTest => "neighbour-test",
            Suite::Volume => "volume",
            Suite::ClosedForm => "closed-form",
            Suite::StripDrift => "strip-drift",
            Suite::Corrector => "corrector",
            Suite::Bijection => "bijection",
            Suite::Counts => "counts",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub t: [u32; 2],
    pub n: [u32; 2],
    pub shapes: usize,
    /// Instances compared (pairs, shapes or edges depending on the suite).
    pub checked: u64,
    pub passed: bool,
    /// First failing instance.
    pub failure: Option<String>,
}

struct Tally {
    checked: u64,
    failure: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { checked: 0, failure: None }
    }

    fn check(&mut self, ok: bool, locus: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(locus());
        }
    }
}

/// Distinct loops of `K` found by trying every start and every move word.
pub fn brute_force_loop_count(params: &TorusParams) -> Result<usize> {
    let n = params.loop_len();
    if n > 24 {
        return Err(Error::Budget { what: "brute-force loop words".into(), needed: 2f64.powi(n as i32), cap: 1 << 24 });
    }
    let mut seen = BTreeSet::new();
    for v in 0..params.vertex_count() {
        for word in 0u32..1 << n {
            let moves = (0..n).map(|i| if word >> i & 1 == 1 { Move::Up } else { Move::Left }).collect();
            let l = Loop { start: params.vertex(v), moves };
            if is_in_k(params, &l) {
                let c = l.canonical(params);
                seen.insert((params.vertex_index(c.start), c.moves));
            }
        }
    }
    Ok(seen.len())
}

pub fn run_suite(params: &TorusParams, suite: Suite, loop_cap: u64) -> Result<SuiteReport> {
    let shapes = enumerate_shapes(params, loop_cap)?;
    let hex = |s: &Shape| s.to_hex(params);
    let mut tally = Tally::new();
    match suite {
        Suite::Bijection => {
            for a in &shapes {
                let f = reconstruct_from_shape(params, a, 0)?;
                for c in [0, 1, -3] {
                    tally.check(nu(&f.shifted(c)) == *a, || format!("nu(f + {c}) != A for A = {}", hex(a)));
                }
                let back = reconstruct_from_shape(params, &nu(&f), 0)?;
                tally.check(back.values == f.values, || format!("reconstruction differs for A = {}", hex(a)));
                tally.check(natural_partition(params, a).cycles.len() == params.g as usize, || {
                    format!("natural partition of {} has the wrong size", hex(a))
                });
                for e in a.edges(params) {
                    let ok = pi12(params, a, e).and_then(|x| pi21(params, a, x)).map(|x| x == e).unwrap_or(false);
                    tally.check(ok, || format!("successor maps are not inverse at {e:?} in {}", hex(a)));
                }
            }
        }
        Suite::Counts => {
            let raw = enumerate_shapes_raw(params, params.n);
            let a: BTreeSet<_> = shapes.iter().collect();
            let b: BTreeSet<_> = raw.iter().collect();
            tally.check(a == b && raw.len() == shapes.len(), || {
                format!("loop construction gives {} shapes, edge search {}", shapes.len(), raw.len())
            });
            let formula = loop_space_size(params);
            let listed = enumerate_loop_space(params, loop_cap)?.len();
            tally.check(formula == listed.into(), || format!("|K| formula {formula} but {listed} loops listed"));
            if let Ok(brute) = brute_force_loop_count(params) {
                tally.check(formula == brute.into(), || format!("|K| formula {formula} but brute force finds {brute}"));
            }
        }
        Suite::NeighbourTest => {
            for a in &shapes {
                for b in &shapes {
                    if a == b || !a.is_disjoint(b) {
                        continue;
                    }
                    if let IntertwineResult::Neighbours(x) = intertwine_neighbor_test(params, a, b) {
                        let direct = !neighbor_delta(params, a, b).is_empty();
                        tally.check(x == direct, || format!("criterion says {x} for ({}, {})", hex(a), hex(b)));
                    }
                }
            }
        }
        Suite::Volume => {
            for a in &shapes {
                for m in neighbors(params, a) {
                    let b = &m.shape;
                    if b == a || !a.is_disjoint(b) {
                        continue;
                    }
                    let v = y_volume(params, a, b)?;
                    let d = y_direct(params, a, b)?;
                    let from_move = Q::new(m.delta_sum, params.vertex_count() as i64);
                    tally.check(v == d && d == from_move, || format!("y = {d}, volume {v} for ({}, {})", hex(a), hex(b)));
                }
            }
        }
        Suite::ClosedForm | Suite::StripDrift => {
            let mut memo: HashMap<Shape, Q> = HashMap::new();
            let nv = Q::from(params.vertex_count() as i64);
            let mut kappa = |s: &Shape| *memo.entry(s.clone()).or_insert_with(|| kappa_strip_volume(params, s) / nv);
            for a in &shapes {
                let r = verify_tau_involution(params, a, &mut kappa);
                if let Some(f) = &r.failure {
                    tally.check(false, || format!("{}: {f}", r.a));
                    continue;
                }
                if suite == Suite::ClosedForm {
                    tally.checked += r.p_neighbors as u64;
                    if !r.closed_form_ok && tally.failure.is_none() {
                        tally.failure = Some(format!("closed form differs for a P-neighbour of {}", r.a));
                    }
                } else {
                    tally.check(r.sum == "0", || format!("increments around {} sum to {}", r.a, r.sum));
                    for p in &r.pairs {
                        tally.check(p.sign_flip && p.involution && p.widths_kept, || {
                            format!("pairing fails at ({}, {}) -> {}", r.a, p.b, p.tau_b)
                        });
                    }
                }
            }
        }
        Suite::Corrector => {
            let graph = build_graph_from_shapes(params, shapes.clone())?;
            let k = solve_corrector(&graph, SolveMode::Rational)?;
            let res = drift_residuals_exact(&graph, &k).ok_or_else(|| Error::Domain("no exact corrector".into()))?;
            for (o, r) in res.iter().enumerate() {
                tally.check(num_traits::Zero::is_zero(r), || {
                    format!("drift {r} at {}", hex(&graph.shapes[graph.reps[o] as usize]))
                });
            }
        }
    }
    Ok(SuiteReport {
        suite: suite.name().into(),
        t: params.t,
        n: params.n,
        shapes: shapes.len(),
        checked: tally.checked,
        passed: tally.failure.is_none(),
        failure: tally.failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_params;

    #[test]
    fn brute_force_loop_counts() {
        for t in [2, 3] {
            let p = make_params([t - 1, t - 1], [1, 1]).unwrap();
            assert_eq!(loop_space_size(&p), brute_force_loop_count(&p).unwrap().into());
        }
    }

    #[test]
    fn all_suites_small() {
        let p = make_params([2, 2], [1, 1]).unwrap();
        for s in Suite::ALL {
            let r = run_suite(&p, s, 1 << 20).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
