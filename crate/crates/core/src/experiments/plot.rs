use std::fmt::Write as _;
use std::io::Write;

use super::curve::{format_sig6, ErrorCurve};
use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    MeanSize,
    Sweep,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Self-contained SVG: one line per (curve, error type) with 95% error bars.
pub fn emit_plot<W: Write>(
    series: &[(&str, &ErrorCurve)],
    labels: [&str; 2],
    x_axis: XAxis,
    title: &str,
    mut out: W,
) -> Result<(), ExperimentError> {
    if series.is_empty() || series.iter().any(|(_, c)| c.is_empty()) {
        return Err(ExperimentError::EmptyCurve);
    }
    let x_of = |r: &super::CurveRow| match x_axis {
        XAxis::MeanSize => r.mean_size,
        XAxis::Sweep => r.sweep,
    };
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, c)| c.rows.iter().map(x_of))
        .filter(|x| x.is_finite())
        .collect();
    let (mut x_min, mut x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(x_min < x_max) {
        x_min -= 1.0;
        x_max += 1.0;
    }
    let y_max = series
        .iter()
        .flat_map(|(_, c)| c.rows.iter())
        .flat_map(|r| [r.err_type1 + r.err_type1_ci, r.err_type2 + r.err_type2_ci])
        .filter(|y| y.is_finite())
        .fold(0.05f64, f64::max)
        .min(1.0);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| TOP + (1.0 - y / y_max) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let (x, y) = (x_min + f * (x_max - x_min), f * y_max);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(x),
            TOP + plot_h + 18.0,
            format_sig6((x * 1000.0).round() / 1000.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(y) + 4.0,
            format_sig6((y * 1000.0).round() / 1000.0)
        );
    }
    let x_label = match x_axis {
        XAxis::MeanSize => "mean infection size",
        XAxis::Sweep => "sweep value",
    };
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">error rate</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut legend_y = TOP + 10.0;
    let mut color = COLORS.iter().cycle();
    for (name, curve) in series {
        for (k, label) in labels.iter().enumerate() {
            let c = color.next().expect("cycle");
            let points: Vec<(f64, f64, f64)> = curve
                .rows
                .iter()
                .map(|r| {
                    let (y, ci) = if k == 0 {
                        (r.err_type1, r.err_type1_ci)
                    } else {
                        (r.err_type2, r.err_type2_ci)
                    };
                    (x_of(r), y, ci)
                })
                .filter(|(x, y, _)| x.is_finite() && y.is_finite())
                .collect();
            let path: Vec<String> = points
                .iter()
                .map(|&(x, y, _)| format!("{:.1},{:.1}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            for &(x, y, ci) in &points {
                let (lo, hi) = ((y - ci).max(0.0), (y + ci).min(y_max));
                let _ = writeln!(
                    svg,
                    r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="{c}"/><circle cx="{0:.1}" cy="{3:.1}" r="2.5" fill="{c}"/>"#,
                    px(x),
                    py(lo),
                    py(hi),
                    py(y)
                );
            }
            let text = if name.is_empty() {
                label.to_string()
            } else {
                format!("{name} {label}")
            };
            let lx = LEFT + plot_w + 10.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                legend_y + 4.0,
                escape(&text)
            );
            legend_y += 18.0;
        }
    }
    svg.push_str("</svg>\n");
    out.write_all(svg.as_bytes()).map_err(|e| ExperimentError::Io {
        context: "writing plot".into(),
        source: e,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::curve::{CurveRow, Tally};

    #[test]
    fn renders_every_point() {
        let t = |e| Tally {
            errors: e,
            correct: 100 - e,
            undecidable: 0,
        };
        let curve = ErrorCurve {
            rows: vec![
                CurveRow::from_tallies(1.0, 5.0, t(10), t(20)),
                CurveRow::from_tallies(2.0, 9.0, t(5), t(8)),
            ],
        };
        let mut buf = Vec::new();
        emit_plot(&[("ball", &curve)], ["type I", "type II"], XAxis::MeanSize, "a < b", &mut buf).unwrap();
        let svg = String::from_utf8(buf).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("a &lt; b"));
        assert!(emit_plot(&[], ["", ""], XAxis::Sweep, "", Vec::new()).is_err());
    }
}
