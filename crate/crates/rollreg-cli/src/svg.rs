//! Minimal self-contained SVG line charts: one polyline per series against
//! the iteration axis, auto-scaled to the data. No plotting dependency.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders `series` as polylines. The x axis is the 1-based sample index;
/// the y axis spans the data with a small pad and always includes zero.
pub fn line_chart(title: &str, series: &[(String, Vec<f64>)]) -> String {
    let longest = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for (_, values) in series {
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi - lo == 0.0 {
        hi = 1.0;
        lo = -1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let x = |i: usize| {
        let span = (longest.max(2) - 1) as f64;
        MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / span
    };
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = write!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        WIDTH / 2.0
    );

    // Frame, zero line, and y extents.
    let _ = write!(
        s,
        "<rect x=\"{m}\" y=\"{m}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"none\" stroke=\"#333\"/>\n",
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN
    );
    if lo < 0.0 && hi > 0.0 {
        let zy = y(0.0);
        let _ = write!(
            s,
            "<line x1=\"{}\" y1=\"{zy:.2}\" x2=\"{:.2}\" y2=\"{zy:.2}\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n",
            MARGIN,
            WIDTH - MARGIN
        );
    }
    let _ = write!(
        s,
        "<text x=\"{x}\" y=\"{y1:.2}\" text-anchor=\"end\">{hi:e}</text>\n\
         <text x=\"{x}\" y=\"{y2:.2}\" text-anchor=\"end\">{lo:e}</text>\n",
        x = MARGIN - 6.0,
        y1 = MARGIN + 4.0,
        y2 = HEIGHT - MARGIN + 4.0
    );
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">iteration</text>\n",
        WIDTH / 2.0,
        HEIGHT - MARGIN + 32.0
    );

    for (k, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (i, &v) in values.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", x(i), y(v));
        }
        let _ = write!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.trim_end()
        );
        let _ = write!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\">{label}</text>\n",
            MARGIN + 8.0,
            MARGIN + 16.0 + 16.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
