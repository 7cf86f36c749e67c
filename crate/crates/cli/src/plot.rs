//! Two-panel SVG line charts of metrics files: MSE on the left, a sample norm
//! on the right, one polyline per run.
//!
//! Output depends only on the input rows and labels, so identical inputs give
//! identical files.

use std::fmt::Write;

use myvt::train::MetricsRow;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 400.0;
const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 280.0;
const TOP: f64 = 50.0;
const LEFTS: [f64; 2] = [70.0, 550.0];
const TICKS: usize = 5;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L1,
    Tv,
}

impl NormKind {
    fn title(self) -> &'static str {
        match self {
            NormKind::L1 => "average l1 norm",
            NormKind::Tv => "average TV",
        }
    }

    fn pick(self, row: &MetricsRow) -> f64 {
        match self {
            NormKind::L1 => row.avg_l1,
            NormKind::Tv => row.avg_tv,
        }
    }
}

pub struct Series {
    pub label: String,
    pub rows: Vec<MetricsRow>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Data range padded so flat series still get a nonempty axis.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn panel(svg: &mut String, left: f64, title: &str, series: &[Series], value: impl Fn(&MetricsRow) -> f64) {
    let (x0, x1) = range(series.iter().flat_map(|s| s.rows.iter().map(|r| r.iteration as f64)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.rows.iter().map(&value)));
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * PANEL_W;
    let sy = |y: f64| TOP + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;

    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="15">{}</text>"#,
        left + PANEL_W / 2.0,
        TOP - 15.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{left:.1}" y="{TOP:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="black"/>"#
    );
    for k in 0..=TICKS {
        let f = k as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let base = TOP + PANEL_H;
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{base:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            base + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
            base + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{left:.1}" y2="{py:.1}" stroke="black"/>"#,
            left - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"#,
            left - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">iteration</text>"#,
        left + PANEL_W / 2.0,
        TOP + PANEL_H + 38.0
    );
    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .rows
            .iter()
            .filter(|r| value(r).is_finite())
            .map(|r| format!("{:.2},{:.2}", sx(r.iteration as f64), sy(value(r))))
            .collect();
        if points.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[i % COLORS.len()],
            points.join(" ")
        );
    }
}

/// Renders the chart. Series with no rows still get a legend entry.
pub fn render(series: &[Series], norm: NormKind) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    panel(&mut svg, LEFTS[0], "MSE", series, |r| r.mse);
    panel(&mut svg, LEFTS[1], norm.title(), series, |r| norm.pick(r));
    let mut x = LEFTS[0];
    let y = HEIGHT - 12.0;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="3"/>"#,
            y - 4.0,
            x + 20.0,
            y - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{y:.1}" font-size="12">{}</text>"#,
            x + 26.0,
            escape(&s.label)
        );
        x += 40.0 + 7.0 * s.label.chars().count() as f64;
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iteration: usize, mse: f64) -> MetricsRow {
        MetricsRow {
            iteration,
            mse,
            avg_l1: 2.0 * mse,
            avg_tv: 3.0 * mse,
            dual_objective: 0.0,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn empty_series_draw_axes_only() {
        let svg = render(&[Series { label: "run".into(), rows: vec![] }], NormKind::L1);
        assert!(!svg.contains("<polyline"));
        assert_eq!(svg.matches("<rect x=").count(), 2);
        assert!(svg.contains(">run</text>"));
    }

    #[test]
    fn one_polyline_per_series_and_panel() {
        let a = Series { label: "a<b".into(), rows: vec![row(0, 1.0), row(1, 0.5)] };
        let b = Series { label: "b".into(), rows: vec![row(0, 2.0), row(1, 0.1)] };
        let svg = render(&[a, b], NormKind::Tv);
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("average TV"));
    }

    #[test]
    fn flat_and_single_point_series_render() {
        let svg = render(&[Series { label: "x".into(), rows: vec![row(4, 1.0)] }], NormKind::L1);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
