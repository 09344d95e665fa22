//! Pure-text SVG emission for sweep results: total-variation estimates with
//! error bars against the box radius, one series per field-strength
//! schedule. No external renderer; output is deterministic byte-for-byte
//! for identical input.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Plot failures.
#[derive(Debug, Error)]
pub enum PlotError {
    /// A required CSV column is absent (named).
    #[error("missing column: {0}")]
    MissingColumn(String),
    /// A cell failed to parse (row and column named).
    #[error("cannot parse row {row}, column {column}: {value:?}")]
    Parse {
        /// 1-based data row.
        row: usize,
        /// Column name.
        column: String,
        /// Offending text.
        value: String,
    },
    /// No data rows.
    #[error("no data rows to plot")]
    Empty,
}

/// One plotted point.
#[derive(Debug, Clone, Copy)]
struct Point {
    n: f64,
    tv: f64,
    se: f64,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

/// Renders the sweep CSV (columns `N`, `alpha`, `tv_mean`, `tv_se`; comma
/// separated, header row first) into a self-contained SVG line plot. Series
/// are grouped by the `alpha` column text and drawn in sorted label order.
pub fn render_svg_from_csv(csv_text: &str) -> Result<String, PlotError> {
    let mut lines = csv_text.lines();
    let header = lines.next().ok_or(PlotError::Empty)?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> Result<usize, PlotError> {
        columns
            .iter()
            .position(|&c| c == name)
            .ok_or_else(|| PlotError::MissingColumn(name.to_string()))
    };
    let n_col = col("N")?;
    let alpha_col = col("alpha")?;
    let tv_col = col("tv_mean")?;
    let se_col = col("tv_se")?;

    let mut series: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let cell = |idx: usize, name: &str| -> Result<f64, PlotError> {
            cells
                .get(idx)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| PlotError::Parse {
                    row: row + 1,
                    column: name.to_string(),
                    value: cells.get(idx).unwrap_or(&"").to_string(),
                })
        };
        let label = format!(
            "alpha={}",
            cells.get(alpha_col).copied().unwrap_or_default()
        );
        series.entry(label).or_default().push(Point {
            n: cell(n_col, "N")?,
            tv: cell(tv_col, "tv_mean")?,
            se: cell(se_col, "tv_se")?,
        });
    }
    if series.values().all(|pts| pts.is_empty()) {
        return Err(PlotError::Empty);
    }

    // Data ranges, padded; degenerate (single-value) ranges get unit width.
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.n.partial_cmp(&b.n).expect("finite N"));
        for p in pts.iter() {
            x_min = x_min.min(p.n);
            x_max = x_max.max(p.n);
            y_min = y_min.min(p.tv - p.se);
            y_max = y_max.max(p.tv + p.se);
        }
    }
    if x_min == x_max {
        x_min -= 1.0;
        x_max += 1.0;
    }
    if y_min == y_max {
        y_min -= 0.05;
        y_max += 0.05;
    }
    let x_pad = 0.05 * (x_max - x_min);
    let y_pad = 0.08 * (y_max - y_min);
    let (x_lo, x_hi) = (x_min - x_pad, x_max + x_pad);
    let (y_lo, y_hi) = (y_min - y_pad, y_max + y_pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |n: f64| MARGIN_LEFT + (n - x_lo) / (x_hi - x_lo) * plot_w;
    let y_of = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    // Axes.
    let x_axis_y = y_of(y_lo);
    let y_axis_x = x_of(x_lo);
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt(y_axis_x),
        fmt(x_axis_y),
        fmt(x_of(x_hi)),
        fmt(x_axis_y)
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt(y_axis_x),
        fmt(y_of(y_hi)),
        fmt(y_axis_x),
        fmt(x_axis_y)
    );

    // Five ticks per axis.
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let px = x_of(fx);
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(px),
            fmt(x_axis_y),
            fmt(px),
            fmt(x_axis_y + 5.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" \
             font-family=\"monospace\">{}</text>",
            fmt(px),
            fmt(x_axis_y + 18.0),
            fmt(fx)
        );
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let py = y_of(fy);
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(y_axis_x - 5.0),
            fmt(py),
            fmt(y_axis_x),
            fmt(py)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\" \
             font-family=\"monospace\">{}</text>",
            fmt(y_axis_x - 8.0),
            fmt(py + 4.0),
            fmt(fy)
        );
    }

    // Axis titles.
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         font-family=\"monospace\">N</text>",
        fmt(MARGIN_LEFT + plot_w / 2.0),
        fmt(HEIGHT - 14.0)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         font-family=\"monospace\" transform=\"rotate(-90 16 {})\">total variation</text>",
        fmt(MARGIN_TOP + plot_h / 2.0),
        fmt(MARGIN_TOP + plot_h / 2.0)
    );

    // Series: error bars, polyline (when more than one point), markers.
    for (idx, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for p in pts {
            let px = x_of(p.n);
            let (y_top, y_bot) = (y_of(p.tv + p.se), y_of(p.tv - p.se));
            let _ = writeln!(
                svg,
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>",
                fmt(px),
                fmt(y_top),
                fmt(px),
                fmt(y_bot)
            );
            for y in [y_top, y_bot] {
                let _ = writeln!(
                    svg,
                    "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>",
                    fmt(px - 4.0),
                    fmt(y),
                    fmt(px + 4.0),
                    fmt(y)
                );
            }
        }
        if pts.len() > 1 {
            let path: Vec<String> =
                pts.iter().map(|p| format!("{},{}", fmt(x_of(p.n)), fmt(y_of(p.tv)))).collect();
            let _ = writeln!(
                svg,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.join(" ")
            );
        }
        for p in pts {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                fmt(x_of(p.n)),
                fmt(y_of(p.tv))
            );
        }
        // Legend entry.
        let ly = MARGIN_TOP + 8.0 + 18.0 * idx as f64;
        let lx = WIDTH - MARGIN_RIGHT - 170.0;
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>",
            fmt(lx),
            fmt(ly),
            fmt(lx + 22.0),
            fmt(ly)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"monospace\">{}</text>",
            fmt(lx + 28.0),
            fmt(ly + 4.0),
            label
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SCHEDULES: &str = "\
T,N,epsilon,alpha,tv_mean,tv_se,z_hat,z_se,p2_exceed,p3_exceed
2.269,8,0.3536,0.5,0.21,0.02,0.9,0.01,0,0
2.269,16,0.25,0.5,0.35,0.02,0.8,0.01,0,0
2.269,8,0.1427,0.9375,0.11,0.02,0.95,0.01,0,0
2.269,16,0.0743,0.9375,0.15,0.02,0.93,0.01,0,0
";

    #[test]
    fn two_schedules_make_two_series_with_legend() {
        let svg = render_svg_from_csv(TWO_SCHEDULES).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">alpha=0.5</text>"));
        assert!(svg.contains(">alpha=0.9375</text>"));
    }

    #[test]
    fn single_point_series_gets_marker_without_line() {
        let csv = "N,alpha,tv_mean,tv_se\n8,0.5,0.2,0.01\n";
        let svg = render_svg_from_csv(csv).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "N,alpha,tv_mean\n8,0.5,0.2\n";
        match render_svg_from_csv(csv) {
            Err(PlotError::MissingColumn(c)) => assert_eq!(c, "tv_se"),
            other => panic!("expected missing-column error, got {other:?}"),
        }
    }

    #[test]
    fn golden_stability_and_parse_errors() {
        let a = render_svg_from_csv(TWO_SCHEDULES).unwrap();
        let b = render_svg_from_csv(TWO_SCHEDULES).unwrap();
        assert_eq!(a, b);
        let bad = "N,alpha,tv_mean,tv_se\nx,0.5,0.2,0.01\n";
        assert!(matches!(
            render_svg_from_csv(bad),
            Err(PlotError::Parse { column, .. }) if column == "N"
        ));
        assert!(matches!(render_svg_from_csv(""), Err(PlotError::Empty)));
        assert!(matches!(
            render_svg_from_csv("N,alpha,tv_mean,tv_se\n"),
            Err(PlotError::Empty)
        ));
    }
}
