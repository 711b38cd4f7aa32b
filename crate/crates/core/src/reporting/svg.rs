//! SVG 1.1 pictures of tilings.
//!
//! Vertex `(a, b)` is drawn at `(s·(a + b/2) + x₀, y₀ − s·(√3/2)·b)` with scale
//! `s` and offsets that put the domain's bounding box at a margin of `s/2`.
//! Every lozenge is one `<polygon class="lozenge">` listing its four corners
//! counterclockwise in the lattice plane.
//!
//! Height mode colours a tile by its level relative to the tiling's ground with
//! `HEIGHT_PALETTE[level + 4]`, clamping levels outside −4..=4.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::lattice::Vertex;
use crate::tiling::{Lozenge, Tiling};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RenderMode {
    Plain,
    Shaded,
    Height,
}

impl FromStr for RenderMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plain" => Ok(RenderMode::Plain),
            "shaded" => Ok(RenderMode::Shaded),
            "height" => Ok(RenderMode::Height),
            _ => Err(format!("unknown render mode `{s}` (plain|shaded|height)")),
        }
    }
}

pub const SHADES: [&str; 3] = ["#f2f2f2", "#a6a6a6", "#595959"];

pub const HEIGHT_PALETTE: [&str; 9] = [
    "#08306b", "#2171b5", "#6baed6", "#c6dbef", "#ffffff", "#fdd0a2", "#fd8d3c", "#d94801",
    "#7f2704",
];

pub const ERROR_STROKE: &str = "#e31a1c";

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RenderOptions {
    pub mode: RenderMode,
    pub error_edges: bool,
    pub scale: f64,
}

impl RenderOptions {
    pub fn new(mode: RenderMode) -> Self {
        RenderOptions {
            mode,
            error_edges: false,
            scale: 20.0,
        }
    }
}

pub fn level_color(level: i32) -> &'static str {
    HEIGHT_PALETTE[(level.clamp(-4, 4) + 4) as usize]
}

struct Frame {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
}

fn frame(t: &Tiling, scale: f64) -> Frame {
    let pts: Vec<(f64, f64)> = t
        .domain()
        .region()
        .vertices()
        .iter()
        .map(|v| v.position())
        .collect();
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let m = scale / 2.0;
    Frame {
        x0: m - scale * min_x,
        y0: m + scale * max_y,
        width: scale * (max_x - min_x) + 2.0 * m,
        height: scale * (max_y - min_y) + 2.0 * m,
    }
}

/// Corners of a lozenge, counterclockwise.
pub fn lozenge_corners(t: &Tiling, l: &Lozenge) -> [Vertex; 4] {
    let tris = t.domain().region().triangles();
    let up = tris[l.up].vertices();
    let down = tris[l.down].vertices();
    let i = (0..3)
        .find(|&i| !down.contains(&up[i]))
        .expect("lozenge triangles share an edge");
    let apex = down.iter().copied().find(|v| !up.contains(v)).unwrap();
    [up[i], up[(i + 1) % 3], apex, up[(i + 2) % 3]]
}

fn draw(t: &Tiling, opts: &RenderOptions, dx: f64, f: &Frame, s: &mut String) {
    let map = |v: Vertex| {
        let (x, y) = v.position();
        (f.x0 + dx + opts.scale * x, f.y0 - opts.scale * y)
    };
    let levels = t.tile_levels(t.ground());
    for (i, l) in t.lozenges().iter().enumerate() {
        let fill = match opts.mode {
            RenderMode::Plain => "#ffffff",
            RenderMode::Shaded => SHADES[l.dir.index()],
            RenderMode::Height => level_color(levels[i]),
        };
        let pts: Vec<String> = lozenge_corners(t, l)
            .iter()
            .map(|&v| {
                let (x, y) = map(v);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        writeln!(s, r##"<polygon class="lozenge" points="{}" fill="{fill}" stroke="#000000" stroke-width="1"/>"##, pts.join(" "))
            .unwrap();
    }
    if opts.error_edges {
        for (p, q) in t.error_edges() {
            let (x1, y1) = map(p);
            let (x2, y2) = map(q);
            writeln!(
                s,
                r#"<line class="error" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{ERROR_STROKE}" stroke-width="3"/>"#
            )
            .unwrap();
        }
    }
}

fn header(width: f64, height: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.3}\" height=\"{height:.3}\" viewBox=\"0 0 {width:.3} {height:.3}\">\n"
    )
}

pub fn render_svg(t: &Tiling, opts: &RenderOptions) -> String {
    let f = frame(t, opts.scale);
    let mut s = header(f.width, f.height);
    draw(t, opts, 0.0, &f, &mut s);
    s.push_str("</svg>\n");
    s
}

/// Frames side by side, each labelled with its step.
pub fn render_strip(frames: &[(u64, &Tiling)], opts: &RenderOptions) -> String {
    let Some((_, first)) = frames.first() else {
        return header(0.0, 0.0) + "</svg>\n";
    };
    let f = frame(first, opts.scale);
    let label = opts.scale;
    let mut s = header(f.width * frames.len() as f64, f.height + label);
    for (k, (step, t)) in frames.iter().enumerate() {
        let dx = f.width * k as f64;
        writeln!(s, "<g class=\"frame\">").unwrap();
        draw(t, opts, dx, &f, &mut s);
        writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="{:.3}" text-anchor="middle">t = {step}</text>"#,
            dx + f.width / 2.0,
            f.height + 0.8 * label,
            0.7 * label
        )
        .unwrap();
        writeln!(s, "</g>").unwrap();
    }
    s.push_str("</svg>\n");
    s
}
