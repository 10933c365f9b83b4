//! Random walks on pn-periodic height functions on the discrete torus.
//!
//! A height function on the `t1 x t2` torus rises `p_i` times and falls `n_i`
//! times along every line in direction `i`. Its set of down steps (its shape)
//! organises into `gcd(n1, n2)` monotone fracture loops. The walk moves to a
//! uniformly chosen neighbour `f ± 1` pointwise; this crate computes the
//! diffusivity of the average height exactly on small tori and by Monte Carlo
//! on larger ones.

pub mod chain;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod loops;
mod modular;
pub mod montecarlo;
pub mod neighbors;
pub mod render;
pub mod sampler;
pub mod shapes;
pub mod strips;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{make_params, Edge, HeightFunction, TorusParams, Vertex, Q};
pub use loops::{Loop, Move, Strip};
pub use shapes::{HeightRecord, Shape};
