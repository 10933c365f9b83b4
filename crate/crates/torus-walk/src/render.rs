//! SVG pictures of a shape: the grid, its down steps, and its fracture loops
//! through the cell centres. Where a loop leaves the torus it is cut at the
//! border and both ends are marked with a small circle.

use std::fmt::Write;

use crate::lattice::TorusParams;
use crate::loops::{to_loops, Loop, Move};
use crate::shapes::Shape;

const CELL: f64 = 24.0;
const MARGIN: f64 = 16.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

struct Canvas {
    t2: f64,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        MARGIN + x * CELL
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.t2 - y) * CELL
    }
}

type Path = Vec<(f64, f64)>;

/// Pieces of a loop inside the fundamental domain `[0, t1] x [0, t2]`, in
/// lattice coordinates, with the border points where it wraps.
fn loop_pieces(params: &TorusParams, l: &Loop) -> (Vec<Path>, Path) {
    let (t1, t2) = (params.t[0] as f64, params.t[1] as f64);
    let mut pieces = Vec::new();
    let mut marks = Vec::new();
    let mut cur = (l.start.x as f64 + 0.5, l.start.y as f64 + 0.5);
    let mut piece = vec![cur];
    for &m in &l.moves {
        let next = match m {
            Move::Up => (cur.0, cur.1 + 1.0),
            Move::Left => (cur.0 - 1.0, cur.1),
        };
        if next.1 > t2 || next.0 < 0.0 {
            let (border, entry, wrapped) = if next.1 > t2 {
                ((cur.0, t2), (cur.0, 0.0), (next.0, next.1 - t2))
            } else {
                ((0.0, cur.1), (t1, cur.1), (next.0 + t1, next.1))
            };
            piece.push(border);
            pieces.push(std::mem::take(&mut piece));
            marks.push(border);
            marks.push(entry);
            piece.push(entry);
            piece.push(wrapped);
            cur = wrapped;
        } else {
            piece.push(next);
            cur = next;
        }
    }
    if piece.len() > 1 {
        pieces.push(piece);
    }
    (pieces, marks)
}

/// Deterministic SVG 1.1 text for `a`.
pub fn render_svg(params: &TorusParams, a: &Shape) -> String {
    let (t1, t2) = (params.t[0] as f64, params.t[1] as f64);
    let cv = Canvas { t2 };
    let w = 2.0 * MARGIN + t1 * CELL;
    let h = 2.0 * MARGIN + t2 * CELL;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        "<title>p=({},{}) n=({},{}) t=({},{})</title>",
        params.p[0], params.p[1], params.n[0], params.n[1], params.t[0], params.t[1]
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r##"<g id="grid" stroke="#d0d0d0" stroke-width="1">"##);
    for x in 0..=params.t[0] {
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, cv.x(x as f64), cv.y(0.0), cv.x(x as f64), cv.y(t2));
    }
    for y in 0..=params.t[1] {
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, cv.x(0.0), cv.y(y as f64), cv.x(t1), cv.y(y as f64));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g id="down-steps" stroke="#d62728" stroke-width="4" stroke-linecap="round">"##);
    for e in a.edges(params) {
        let (x0, y0) = (e.base.x as f64, e.base.y as f64);
        let (x1, y1) = if e.dir == 1 { (x0 + 1.0, y0) } else { (x0, y0 + 1.0) };
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, cv.x(x0), cv.y(y0), cv.x(x1), cv.y(y1));
    }
    let _ = writeln!(s, "</g>");
    for (i, l) in to_loops(params, a).iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let (pieces, marks) = loop_pieces(params, l);
        let _ = writeln!(s, r#"<g class="loop" id="loop-{i}" stroke="{colour}" fill="none" stroke-width="2">"#);
        for piece in &pieces {
            let pts: Vec<String> = piece.iter().map(|&(x, y)| format!("{},{}", cv.x(x), cv.y(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}"/>"#, pts.join(" "));
        }
        for &(x, y) in &marks {
            let _ = writeln!(s, r#"<circle class="wrap" cx="{}" cy="{}" r="3" fill="{colour}"/>"#, cv.x(x), cv.y(y));
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure_shape;
    use crate::lattice::make_params;
    use crate::shapes::canonical_shape;

    #[test]
    fn figure_picture() {
        let p = make_params([3, 3], [1, 1]).unwrap();
        let svg = render_svg(&p, &figure_shape(&p));
        let body = svg.split(r#"<g id="down-steps""#).nth(1).unwrap().split("</g>").next().unwrap();
        assert_eq!(body.matches("<line").count(), 8);
        assert_eq!(svg.matches(r#"class="loop""#).count(), 1);
        assert_eq!(svg, render_svg(&p, &figure_shape(&p)));
    }

    #[test]
    fn smallest_torus() {
        let p = make_params([1, 1], [1, 1]).unwrap();
        let svg = render_svg(&p, &canonical_shape(&p));
        assert_eq!(svg.matches(r#"class="loop""#).count(), 1);
        assert!(svg.contains(r#"width="80""#));
    }
}
