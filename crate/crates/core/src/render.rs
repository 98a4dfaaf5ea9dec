//! Deterministic SVG drawings of graphs: one `<line>` per materialized
//! segment, one `<rect>` per box, and a frame around the ambient square.

use std::fmt::Write;

use crate::function::{FiniteGraph, SetValuedFn};
use crate::scalar::{to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    /// Members per segment family, and family index bound for generated
    /// functions.
    pub truncation: i64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { width: 400, height: 400, truncation: 8 }
    }
}

const MARGIN: f64 = 20.0;

pub fn render_svg(f: &SetValuedFn, options: &RenderOptions) -> String {
    match f {
        SetValuedFn::Finite(g) => render_graph(g, options.truncation, options),
        SetValuedFn::Generated(g) => render_graph(&g.truncate(options.truncation), options.truncation, options),
    }
}

fn render_graph(g: &FiniteGraph, count: i64, o: &RenderOptions) -> String {
    let (x0, x1) = g.domain();
    let (y0, y1) = g.codomain();
    let (w, h) = (o.width as f64, o.height as f64);
    let sx = |x: &Rational| MARGIN + to_f64(&((x - x0) / (x1 - x0))) * (w - 2.0 * MARGIN);
    let sy = |y: &Rational| h - MARGIN - to_f64(&((y - y0) / (y1 - y0))) * (h - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        o.width, o.height, o.width, o.height
    )
    .unwrap();
    let (l, r, t, b) = (sx(x0), sx(x1), sy(y1), sy(y0));
    writeln!(
        s,
        r##"<path d="M {l:.6} {b:.6} L {r:.6} {b:.6} L {r:.6} {t:.6} L {l:.6} {t:.6} Z" fill="none" stroke="#888888"/>"##
    )
    .unwrap();
    for bx in g.boxes() {
        let (bl, br, bt, bb) = (sx(&bx.x0), sx(&bx.x1), sy(&bx.y1), sy(&bx.y0));
        writeln!(
            s,
            r##"<rect x="{bl:.6}" y="{bt:.6}" width="{:.6}" height="{:.6}" fill="#cccccc" stroke="#000000"/>"##,
            br - bl,
            bb - bt
        )
        .unwrap();
    }
    for seg in g.materialized_segments(count) {
        if seg.start == seg.end {
            continue;
        }
        writeln!(
            s,
            r##"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="#000000"/>"##,
            sx(&seg.start.0),
            sy(&seg.start.1),
            sx(&seg.end.0),
            sy(&seg.end.1)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
