//! A worked (3,3)(1,1) example on the 4x4 torus, used by tests and the CLI.

use crate::lattice::{Edge, TorusParams, Q};
use crate::shapes::Shape;

/// Heights of the example, row-major with `y` rows of `x` values.
pub fn figure_values() -> Vec<Q> {
    let halves: [i64; 16] = [
        6, 7, 8, 5, //
        7, 8, 9, 6, //
        8, 9, 6, 7, //
        5, 6, 7, 4,
    ];
    halves.iter().map(|&h| Q::new(h, 2)).collect()
}

pub fn figure_edges() -> Vec<Edge> {
    vec![
        Edge::new(2, 0, 1),
        Edge::new(2, 1, 1),
        Edge::new(1, 2, 1),
        Edge::new(2, 3, 1),
        Edge::new(0, 2, 2),
        Edge::new(1, 2, 2),
        Edge::new(2, 1, 2),
        Edge::new(3, 2, 2),
    ]
}

/// Its down-step set; `params` must be the (3,3)(1,1) torus.
pub fn figure_shape(params: &TorusParams) -> Shape {
    Shape::from_edges(params, &figure_edges())
}
