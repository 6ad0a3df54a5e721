//! Minimal SVG line plots: stacked panels sharing one x axis.
//!
//! Coordinates are printed with two decimals, so identical data gives
//! identical bytes.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub panels: Vec<Panel>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 220.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 45.0;
const TOP: f64 = 40.0;
const GAP: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f4e9c", "#222222", "#c0392b", "#2e8b57", "#8e44ad", "#d35400"];

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return Some((lo - pad, hi + pad));
    }
    let pad = (hi - lo) * 0.05;
    Some((lo - pad, hi + pad))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(fig: &Figure) -> Result<String, PlotError> {
    let all_points = || fig.panels.iter().flat_map(|p| p.series.iter()).flat_map(|s| s.points.iter());
    if all_points().next().is_none() {
        return Err(PlotError::Empty);
    }
    let xs: Vec<f64> = all_points().map(|p| p.0).collect();
    let (x0, x1) = bounds(xs.iter()).ok_or(PlotError::Empty)?;
    let plot_w = WIDTH - LEFT - RIGHT;
    let height = TOP + fig.panels.len() as f64 * (PANEL_HEIGHT + GAP) + 10.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(&fig.title)
    );
    for (k, panel) in fig.panels.iter().enumerate() {
        let top = TOP + k as f64 * (PANEL_HEIGHT + GAP);
        let bottom = top + PANEL_HEIGHT;
        let ys: Vec<f64> = panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
        let Some((y0, y1)) = bounds(ys.iter()) else { continue };
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| bottom - (y - y0) / (y1 - y0) * PANEL_HEIGHT;
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{top:.2}" width="{plot_w:.2}" height="{PANEL_HEIGHT:.2}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.3e}</text>"#,
                px(xv),
                bottom + 14.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3e}</text>"#,
                LEFT - 4.0,
                py(yv) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            top + PANEL_HEIGHT / 2.0,
            top + PANEL_HEIGHT / 2.0,
            escape(&panel.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            bottom + 30.0,
            escape(&fig.x_label)
        );
        for (j, series) in panel.series.iter().enumerate() {
            let color = COLORS[j % COLORS.len()];
            let dash = if series.dashed { r#" stroke-dasharray="4 3""# } else { "" };
            // Non-finite values break the line into segments.
            for run in series.points.split(|p| !p.1.is_finite() || !p.0.is_finite()) {
                if run.is_empty() {
                    continue;
                }
                let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text>"#,
                WIDTH - RIGHT - 6.0,
                top + 14.0 + 13.0 * j as f64,
                escape(&series.label)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
