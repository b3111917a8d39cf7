//! Minimal SVG writers: two-color heatmaps and log-scale line plots.

use std::fmt::Write;

use sgrl_core::diag::SignGrid;

const NEG_COLOR: &str = "#f2d024";
const POS_COLOR: &str = "#5b2a86";
const ZERO_COLOR: &str = "#ffffff";
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Sign grid as a heatmap with `x` left to right and `y` bottom to top.
/// Negative cells are yellow, positive cells purple; a ring marks the
/// anchor `(x₁, y₁)` of `z_ref`.
pub fn heatmap(grid: &SignGrid, title: &str) -> String {
    let res = grid.resolution;
    let cell = (600.0 / res as f64).max(1.0);
    let side = cell * res as f64;
    let (pad, top) = (50.0, 30.0);
    let (w, h) = (side + 2.0 * pad, side + top + pad);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w:.1} {h:.1}" width="{w:.0}" height="{h:.0}">"#
    )
    .unwrap();
    writeln!(s, r#"<title>{}</title>"#, escape(title)).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(s, r#"<g shape-rendering="crispEdges">"#).unwrap();
    for j in 0..res {
        // Run-length encode each row to keep files small.
        let y = top + side - (j + 1) as f64 * cell;
        let mut i = 0;
        while i < res {
            let v = grid.get(i, j);
            let start = i;
            while i < res && grid.get(i, j) == v {
                i += 1;
            }
            let color = match v {
                -1 => NEG_COLOR,
                1 => POS_COLOR,
                _ => ZERO_COLOR,
            };
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                pad + start as f64 * cell,
                y,
                (i - start) as f64 * cell,
                cell
            )
            .unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();
    let (mx, my) = (grid.z_ref[0], grid.z_ref[grid.z_ref.len() / 2]);
    writeln!(
        s,
        r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="none" stroke="black" stroke-width="2"/>"#,
        pad + mx * side,
        top + side - my * side
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{pad}" y="{top}" width="{side:.2}" height="{side:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">x₁</text>"#,
        w / 2.0,
        h - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="15" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {:.1})">y₁</text>"#,
        top + side / 2.0,
        top + side / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line plot with a linear x axis and a log₁₀ y axis. Values at or below
/// `floor` are drawn at `floor`.
pub fn log_plot(series: &[Series], title: &str, x_label: &str, floor: f64) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 150.0, 30.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        let ly = y.max(floor).log10();
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(ly);
        y_hi = y_hi.max(ly);
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    let (y_lo, y_hi) = (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0));
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let sx = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| top + ph - (y.max(floor).log10() - y_lo) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#
    )
    .unwrap();
    writeln!(s, r#"<title>{}</title>"#, escape(title)).unwrap();
    writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let decades = (y_hi - y_lo) as i64;
    let stride = (decades / 10).max(1);
    let mut e = y_lo as i64;
    while e <= y_hi as i64 {
        let y = top + ph - (e as f64 - y_lo) / (y_hi - y_lo) * ph;
        writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="rgb(221,221,221)"/><text x="{:.1}" y="{:.2}" text-anchor="end" font-size="11">1e{e}</text>"##,
            left + pw,
            left - 5.0,
            y + 4.0
        )
        .unwrap();
        e += stride;
    }
    for k in 0..=4 {
        let xv = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
            sx(xv),
            top + ph + 16.0,
            fmt_tick(xv)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        left + pw / 2.0,
        h - 10.0,
        escape(x_label)
    )
    .unwrap();
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        let ly = top + 20.0 + 20.0 * k as f64;
        writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            left + pw + 10.0,
            left + pw + 30.0,
            left + pw + 35.0,
            ly + 4.0,
            escape(ser.name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
