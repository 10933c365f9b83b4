//! Browser bindings for a small interactive page: pick a torus and a shape,
//! walk it step by step, and sample the strips of uniform loops.

use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use torus_walk::montecarlo::{random_shape, run_rng, step_walk, strip_statistics, WalkState};
use torus_walk::render::render_svg;
use torus_walk::sampler::SamplerStats;
use torus_walk::shapes::canonical_shape;
use torus_walk::{make_params, TorusParams};

/// Largest side accepted from the page.
const MAX_SIDE: i64 = 60;

#[wasm_bindgen]
pub struct Demo {
    params: TorusParams,
    state: WalkState,
    rng: ChaCha8Rng,
    stats: SamplerStats,
    steps: u64,
    same_shape: u64,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(p1: i64, p2: i64, n1: i64, n2: i64, seed: u64) -> Result<Demo, String> {
        if p1 + n1 > MAX_SIDE || p2 + n2 > MAX_SIDE {
            return Err(format!("torus sides are limited to {MAX_SIDE}"));
        }
        let params = make_params([p1, p2], [n1, n2]).map_err(err)?;
        let state = WalkState::new(&params, canonical_shape(&params), 0).map_err(err)?;
        Ok(Demo { params, state, rng: run_rng(seed, 0), stats: SamplerStats::default(), steps: 0, same_shape: 0 })
    }

    /// Replaces the shape by one built from random fracture loops.
    pub fn randomize(&mut self) -> Result<(), String> {
        let a = random_shape(&self.params, 200_000, &mut self.rng).map_err(err)?;
        self.state = WalkState::new(&self.params, a, self.state.anchor).map_err(err)?;
        Ok(())
    }

    /// Takes `k` steps of the walk and returns the average height.
    pub fn walk(&mut self, k: u32) -> Result<f64, String> {
        for _ in 0..k {
            let info = step_walk(&self.params, &mut self.state, &mut self.rng, &mut self.stats).map_err(err)?;
            self.steps += 1;
            self.same_shape += info.same_shape as u64;
        }
        Ok(self.average_height())
    }

    pub fn average_height(&self) -> f64 {
        let h = self.state.average_height();
        *h.numer() as f64 / *h.denom() as f64
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn same_shape_steps(&self) -> u64 {
        self.same_shape
    }

    pub fn svg(&self) -> String {
        render_svg(&self.params, &self.state.shape)
    }

    /// Width, centre and disjointness statistics of `samples` uniform loops
    /// as JSON text.
    pub fn strip_report(&mut self, samples: u32, eps: f64) -> String {
        let r = strip_statistics(&self.params, samples as u64, &[eps], &mut self.rng);
        format!(
            r#"{{"t":[{},{}],"samples":{},"eps":{},"r_fraction":{:.6},"ks_h":{:.6},"disjoint_fraction":{:.6}}}"#,
            r.t[0], r.t[1], r.samples, eps, r.r_fraction[0], r.ks_h, r.disjoint_fraction
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_and_draw() {
        let mut d = Demo::new(3, 3, 1, 1, 4).unwrap();
        let h0 = d.average_height();
        let h = d.walk(50).unwrap();
        assert_eq!(d.steps(), 50);
        assert!((h - h0).abs() <= 50.0);
        assert!(d.svg().starts_with("<?xml"));
        d.randomize().unwrap();
        assert!(d.strip_report(100, 0.25).contains("\"samples\":100"));
    }

    #[test]
    fn rejects_large_tori() {
        assert!(Demo::new(80, 3, 1, 1, 0).is_err());
    }
}
