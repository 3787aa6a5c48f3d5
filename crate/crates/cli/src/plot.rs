//! Minimal SVG scatter of a 2-D projection.

use std::collections::HashMap;
use std::fmt::Write;

use probclust_core::{ClusterModel, FeatVec, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Frame {
    min: [f64; 2],
    span: [f64; 2],
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.min[0]) / self.span[0] * (WIDTH - 2.0 * MARGIN)
    }

    /// SVG y grows downward.
    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.min[1]) / self.span[1] * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Points colored by owning region, one `class="center"` marker per region,
/// and each region's projected scale as an axis-aligned box.
pub fn render_projection(
    model: &ClusterModel,
    points: &[FeatVec],
    owners: &[usize],
    (jx, jy): (usize, usize),
) -> Result<String> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |x: f64, y: f64| {
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    };
    for p in points {
        grow(p[jx], p[jy]);
    }
    for r in &model.regions {
        let s = r.fitted()?;
        let (c, d) = (s.center(), s.scale());
        grow(c[jx] - d[jx], c[jy] - d[jy]);
        grow(c[jx] + d[jx], c[jy] + d[jy]);
    }
    let span = |i: usize| if hi[i] > lo[i] { hi[i] - lo[i] } else { 1.0 };
    let frame = Frame {
        min: lo,
        span: [span(0), span(1)],
    };
    let color: HashMap<usize, &str> = model
        .regions
        .iter()
        .enumerate()
        .map(|(pos, r)| (r.id, PALETTE[pos % PALETTE.len()]))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">dims {jx} vs {jy}: {} regions, {} points</text>"#,
        model.cluster_count(),
        points.len()
    );
    let _ = writeln!(svg, r#"<g class="points">"#);
    for (p, owner) in points.iter().zip(owners) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.6"/>"#,
            frame.x(p[jx]),
            frame.y(p[jy]),
            color.get(owner).copied().unwrap_or("black")
        );
    }
    let _ = writeln!(svg, "</g>");
    for r in &model.regions {
        let s = r.fitted()?;
        let (c, d) = (s.center(), s.scale());
        let col = color[&r.id];
        let (x0, x1) = (frame.x(c[jx] - d[jx]), frame.x(c[jx] + d[jx]));
        let (y0, y1) = (frame.y(c[jy] + d[jy]), frame.y(c[jy] - d[jy]));
        let _ = writeln!(
            svg,
            r#"<rect class="scale" data-region="{}" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{col}" stroke-dasharray="4 3"/>"#,
            r.id,
            x1 - x0,
            y1 - y0
        );
        let (cx, cy) = (frame.x(c[jx]), frame.y(c[jy]));
        let _ = writeln!(
            svg,
            r#"<path class="center" data-region="{}" d="M{:.2} {cy:.2}H{:.2}M{cx:.2} {:.2}V{:.2}" stroke="black" stroke-width="2"/>"#,
            r.id,
            cx - 6.0,
            cx + 6.0,
            cy - 6.0,
            cy + 6.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
