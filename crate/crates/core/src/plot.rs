//! Minimal SVG charts for importance profiles and selection curves.

use std::fmt::Write;

use crate::evaluation::ComparisonReport;
use crate::vtf::ImportanceProfile;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Vertical bars, one per label. Non-finite values are clipped to the
/// finite range and drawn hatched grey.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = range(finite.chain(std::iter::once(0.0)));
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y_of = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);
    let slot = (WIDTH - 2.0 * MARGIN) / values.len().max(1) as f64;
    let mut out = String::new();
    header(&mut out, title);
    let zero = y_of(0.0);
    let _ = writeln!(out, r#"<line x1="{MARGIN}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="black"/>"#, WIDTH - MARGIN);
    for (k, (label, &v)) in labels.iter().zip(values).enumerate() {
        let clipped = if v.is_nan() {
            0.0
        } else {
            v.clamp(lo, hi)
        };
        let x = MARGIN + slot * k as f64 + slot * 0.1;
        let (top, bottom) = if clipped >= 0.0 { (y_of(clipped), zero) } else { (zero, y_of(clipped)) };
        let fill = if v.is_finite() { PALETTE[0] } else { "#999999" };
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>{}: {v}</title></rect>"#,
            slot * 0.8,
            (bottom - top).max(0.0),
            escape(label)
        );
        let lx = x + slot * 0.4;
        let ly = HEIGHT - MARGIN + 14.0;
        let _ = writeln!(
            out,
            r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="end" transform="rotate(-45 {lx:.2} {ly:.2})">{}</text>"#,
            escape(label)
        );
    }
    for v in [lo, hi] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0, y_of(v) + 4.0);
    }
    out.push_str("</svg>\n");
    out
}

pub fn profile_chart(profile: &ImportanceProfile) -> String {
    let title = format!("{} importance", profile.method);
    bar_chart(&title, &profile.feature_names, &profile.scores)
}

/// One series per entry; `None` values break the line.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, Option<f64>)>,
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (xlo, xhi) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (ylo, yhi) = range(series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1).filter(|v| v.is_finite())));
    let x_of = |x: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * (x - xlo) / (xhi - xlo);
    let y_of = |y: f64| MARGIN + (HEIGHT - 2.0 * MARGIN) * (yhi - y) / (yhi - ylo);
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<path d="M{MARGIN} {MARGIN} V{} H{}" fill="none" stroke="black"/>"#,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, anchor_y) in [(ylo, y_of(ylo)), (yhi, y_of(yhi))] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.4}</text>"#, MARGIN - 4.0, anchor_y + 4.0);
    }
    for (v, anchor_x) in [(xlo, x_of(xlo)), (xhi, x_of(xhi))] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.2}" y="{}" text-anchor="middle">{v:.2}</text>"#, HEIGHT - MARGIN + 14.0);
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            match y.filter(|v| v.is_finite()) {
                Some(y) => {
                    let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, x_of(x), y_of(y));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let _ = writeln!(out, r#"<path class="series" d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.trim_end());
        let ly = MARGIN + 14.0 * k as f64;
        let lx = WIDTH - MARGIN - 120.0;
        let _ = writeln!(
            out,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Fraction removed against metric, one line per method.
pub fn comparison_chart(report: &ComparisonReport) -> String {
    let series: Vec<Series<'_>> = report
        .methods
        .iter()
        .map(|m| Series {
            name: &m.name,
            points: std::iter::once((0.0, Some(m.baseline)))
                .chain(m.curve.iter().map(|p| (p.fraction, p.metric)))
                .collect(),
        })
        .collect();
    let metric = match report.metric_kind {
        crate::evaluation::MetricKind::Mse => "test MSE",
        crate::evaluation::MetricKind::Accuracy => "test accuracy",
    };
    line_chart("Feature removal", "fraction of features removed", metric, &series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vtf::{Direction, Method};

    #[test]
    fn one_bar_per_feature() {
        let names: Vec<String> = (0..5).map(|j| format!("f<{j}>")).collect();
        let p = ImportanceProfile::new(Method::Vtf, vec![0.1, -0.3, f64::INFINITY, f64::NAN, 2.0], Direction::HigherIsLessImportant, names).unwrap();
        let svg = profile_chart(&p);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 5);
        assert!(svg.contains("f&lt;0&gt;"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("NaN\""));
    }

    #[test]
    fn gaps_split_lines_and_legend_lists_series() {
        let series = [
            Series {
                name: "a",
                points: vec![(0.1, Some(1.0)), (0.2, None), (0.3, Some(2.0)), (0.4, Some(2.5))],
            },
            Series {
                name: "b",
                points: vec![(0.1, Some(0.5)), (0.4, Some(0.5))],
            },
        ];
        let svg = line_chart("t", "x", "y", &series);
        assert_eq!(svg.matches(r#"class="legend""#).count(), 2);
        let first = svg.lines().find(|l| l.contains(r#"class="series""#)).unwrap();
        assert_eq!(first.matches('M').count(), 2);
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let svg = bar_chart("flat", &["a".into(), "b".into()], &[0.0, 0.0]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        let svg = line_chart("flat", "x", "y", &[Series { name: "s", points: vec![(0.5, Some(1.0))] }]);
        assert!(!svg.contains("NaN"));
    }
}
