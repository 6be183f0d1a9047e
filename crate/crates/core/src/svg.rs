//! SVG rendering of a developed layout.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::Face;
use crate::layout::{LayoutResult, OverlapReport};

pub const OVERLAP_CLASS: &str = "overlap";

/// One polygon per placed face; faces that appear in an overlap pair get the
/// `overlap` class. The y axis is flipped so the picture has the usual orientation.
pub fn render_svg(layout: &LayoutResult, overlaps: &OverlapReport) -> Result<String> {
    if layout.placed_faces.is_empty() {
        return Err(Error::InvalidArgument("layout has no faces".into()));
    }
    let hot: BTreeSet<Face> = overlaps.pairs.iter().flat_map(|p| [p.a, p.b]).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for f in &layout.placed_faces {
        for z in f.points {
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(-z.im);
            y1 = y1.max(-z.im);
        }
    }
    let pad_x = 0.05 * (x1 - x0).max(f64::MIN_POSITIVE);
    let pad_y = 0.05 * (y1 - y0).max(f64::MIN_POSITIVE);
    let (vx, vy) = (x0 - pad_x, y0 - pad_y);
    let (vw, vh) = (x1 - x0 + 2.0 * pad_x, y1 - y0 + 2.0 * pad_y);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<!-- generator: hexconf {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{vx} {vy} {vw} {vh}\">");
    s.push_str("<style>polygon{fill:#dfe8f3;stroke:#1d3557;stroke-width:0.6;vector-effect:non-scaling-stroke}");
    let _ = writeln!(s, "polygon.{OVERLAP_CLASS}{{fill:#e63946;fill-opacity:0.6}}</style>");
    for f in &layout.placed_faces {
        let pts: Vec<String> = f.points.iter().map(|z| format!("{},{}", z.re, -z.im)).collect();
        let class = if hot.contains(&f.face) { format!(" class=\"{OVERLAP_CLASS}\"") } else { String::new() };
        let _ = writeln!(s, "<polygon data-face=\"{}\"{class} points=\"{}\"/>", f.face, pts.join(" "));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(layout: &LayoutResult, overlaps: &OverlapReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(layout, overlaps)?).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// Number of polygons and of highlighted polygons in a rendered document.
pub fn count_polygons(svg: &str) -> (usize, usize) {
    let total = svg.matches("<polygon ").count();
    let hot = svg.matches(&format!("class=\"{OVERLAP_CLASS}\"")).count();
    (total, hot)
}
