//! Deterministic SVG emitters: neuron kept-fraction heatmaps, per-layer
//! line plots, and depth×sparsity accuracy grids. Output bytes depend only
//! on the input values, so figures can be fixture-tested.

use std::fmt::Write;

const CELL: usize = 10;
const MARGIN: usize = 30;

/// Linear two-endpoint color ramp over [0,1] (dark violet → yellow).
fn ramp(v: f64) -> String {
    let t = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 37.0))
}

fn svg_open(out: &mut String, width: usize, height: usize, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<title>{title}</title>\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
}

/// Heatmap with one pixel per matrix cell; `rows[i][j]` ∈ [0,1] colors
/// pixel (i,j). Rows may be ragged (e.g. per-layer neuron counts differ).
/// Returns `None` (no-op) when the input is empty.
pub fn heatmap_svg(rows: &[Vec<f64>], title: &str) -> Option<String> {
    if rows.is_empty() || rows.iter().all(|r| r.is_empty()) {
        return None;
    }
    let ncols = rows.iter().map(|r| r.len()).max().unwrap();
    let width = 2 * MARGIN + ncols * CELL;
    let height = 2 * MARGIN + rows.len() * CELL;
    let mut out = String::new();
    svg_open(&mut out, width, height, title);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let _ = write!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\"/>\n",
                MARGIN + j * CELL,
                MARGIN + i * CELL,
                ramp(v)
            );
        }
    }
    let _ = write!(
        out,
        "<text x=\"{MARGIN}\" y=\"20\" font-family=\"monospace\" font-size=\"12\">{title}</text>\n</svg>\n"
    );
    Some(out)
}

/// One polyline per series over a shared layer axis; values are plotted on
/// a linear [0, max] scale. Returns `None` when every series is empty.
pub fn line_plot_svg(series: &[(String, Vec<f64>)], title: &str) -> Option<String> {
    if series.is_empty() || series.iter().all(|(_, v)| v.is_empty()) {
        return None;
    }
    let (w, h) = (480usize, 300usize);
    let npts = series.iter().map(|(_, v)| v.len()).max().unwrap();
    let vmax = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let mut out = String::new();
    svg_open(&mut out, w, h, title);
    let plot_w = (w - 2 * MARGIN) as f64;
    let plot_h = (h - 2 * MARGIN) as f64;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for (s, (name, vals)) in series.iter().enumerate() {
        if vals.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for (i, &v) in vals.iter().enumerate() {
            let x = MARGIN as f64 + plot_w * i as f64 / (npts.max(2) - 1) as f64;
            let y = (h - MARGIN) as f64 - plot_h * (v / vmax).clamp(0.0, 1.0);
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let color = colors[s % colors.len()];
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.trim_end()
        );
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" fill=\"{color}\">{name}</text>\n",
            w - MARGIN - 110,
            MARGIN + 12 * (s + 1)
        );
    }
    // Axes.
    let _ = write!(
        out,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{m}\" y=\"20\" font-family=\"monospace\" font-size=\"12\">{title}</text>\n</svg>\n",
        m = MARGIN,
        t = MARGIN,
        b = h - MARGIN,
        r = w - MARGIN,
    );
    Some(out)
}

/// Depth × sparsity accuracy grid with axis tick labels; `grid[i][j]` is
/// the accuracy at `depths[i]`, `sparsities[j]`, or NaN for a failed cell
/// (drawn gray). Returns `None` on empty input.
pub fn accuracy_grid_svg(
    depths: &[usize],
    sparsities: &[f64],
    grid: &[Vec<f64>],
    title: &str,
) -> Option<String> {
    if depths.is_empty() || sparsities.is_empty() || grid.is_empty() {
        return None;
    }
    let cell = 28usize;
    let width = 2 * MARGIN + sparsities.len() * cell;
    let height = 2 * MARGIN + depths.len() * cell;
    let mut out = String::new();
    svg_open(&mut out, width, height, title);
    for (i, row) in grid.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let fill = if v.is_finite() { ramp(v) } else { "#bbbbbb".to_string() };
            let x = MARGIN + j * cell;
            let y = MARGIN + i * cell;
            let _ = write!(
                out,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" stroke=\"white\"/>\n"
            );
            if v.is_finite() {
                let _ = write!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"8\" \
                     text-anchor=\"middle\" fill=\"black\">{:.2}</text>\n",
                    x + cell / 2,
                    y + cell / 2 + 3,
                    v
                );
            }
        }
    }
    for (i, d) in depths.iter().enumerate() {
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"end\">{d}</text>\n",
            MARGIN - 4,
            MARGIN + i * cell + cell / 2 + 3
        );
    }
    for (j, s) in sparsities.iter().enumerate() {
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"middle\">{s:.1}</text>\n",
            MARGIN + j * cell + cell / 2,
            MARGIN + depths.len() * cell + 12
        );
    }
    let _ = write!(
        out,
        "<text x=\"{MARGIN}\" y=\"20\" font-family=\"monospace\" font-size=\"12\">{title}</text>\n</svg>\n"
    );
    Some(out)
}
