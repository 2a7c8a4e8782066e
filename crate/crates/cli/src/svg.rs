//! Static scatter plot of an embedding.

use std::fmt::Write;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// First two coordinates of each point (the second is 0 for 1-D
/// embeddings), scaled uniformly into a square canvas.
pub fn scatter(coords: &[Vec<f64>], labels: &[String]) -> String {
    let xy: Vec<(f64, f64)> =
        coords.iter().map(|c| (c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0))).collect();
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &xy {
        lo_x = lo_x.min(x);
        hi_x = hi_x.max(x);
        lo_y = lo_y.min(y);
        hi_y = hi_y.max(y);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let (cx, cy) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, &(x, y)) in xy.iter().enumerate() {
        let px = SIZE / 2.0 + (x - cx) * scale;
        // SVG y grows downwards
        let py = SIZE / 2.0 - (y - cy) * scale;
        let _ = writeln!(out, "  <circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"4\" fill=\"#1f77b4\"/>");
        if let Some(l) = labels.get(i) {
            let _ = writeln!(
                out,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>",
                px + 6.0,
                py - 6.0,
                escape(l)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
