//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub y_scale: Scale,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

impl Chart<'_> {
    /// Renders the series. Points that cannot be shown on the chosen scale
    /// (non-finite, or non-positive on a log axis) split the polyline.
    pub fn render(&self, series: &[Series]) -> String {
        let ty = |y: f64| match self.y_scale {
            Scale::Linear => y.is_finite().then_some(y),
            Scale::Log10 => (y.is_finite() && y > 0.0).then(|| y.log10()),
        };
        let visible: Vec<(f64, f64)> = series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|&(x, y)| Some((x, ty(y)?)).filter(|p| p.0.is_finite()))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = (0.0, 1.0, 0.0, 1.0);
        if !visible.is_empty() {
            x0 = visible.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            x1 = visible.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            y0 = visible.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            y1 = visible.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        }
        if self.y_scale == Scale::Log10 {
            y0 = y0.floor();
            y1 = y1.ceil();
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(self.title)
        )
        .unwrap();
        writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(fx),
                MARGIN_TOP + plot_h + 16.0,
                tick_label(fx)
            )
            .unwrap();
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let label = match self.y_scale {
                Scale::Linear => tick_label(fy),
                Scale::Log10 => format!("1e{}", (fy * 100.0).round() / 100.0),
            };
            writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
                MARGIN_LEFT - 6.0,
                py(fy) + 4.0
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 10.0,
            escape(self.x_label)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(self.y_label)
        )
        .unwrap();

        for (k, s) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut segment: Vec<String> = Vec::new();
            let flush = |segment: &mut Vec<String>, out: &mut String| {
                if segment.len() > 1 {
                    writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        segment.join(" ")
                    )
                    .unwrap();
                } else if let Some(p) = segment.first() {
                    let (cx, cy) = p.split_once(',').unwrap();
                    writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="2" fill="{color}"/>"#).unwrap();
                }
                segment.clear();
            };
            for &(x, y) in &s.points {
                match ty(y) {
                    Some(v) if x.is_finite() => segment.push(format!("{:.2},{:.2}", px(x), py(v))),
                    _ => flush(&mut segment, &mut out),
                }
            }
            flush(&mut segment, &mut out);
            let ly = MARGIN_TOP + 14.0 + 18.0 * k as f64;
            let lx = WIDTH - MARGIN_RIGHT + 10.0;
            writeln!(
                out,
                r#"<line x1="{lx}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
                ly - 4.0,
                lx + 20.0,
                ly - 4.0
            )
            .unwrap();
            writeln!(out, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 26.0, escape(&s.name)).unwrap();
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polylines_and_breaks_on_gaps() {
        let chart = Chart {
            title: "t <1>",
            x_label: "x",
            y_label: "y",
            y_scale: Scale::Log10,
        };
        let svg = chart.render(&[Series {
            name: "a".into(),
            points: vec![(0.0, 1.0), (1.0, 0.1), (2.0, 0.0), (3.0, 1e-3), (4.0, 1e-4)],
        }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;1&gt;"));
    }

    #[test]
    fn empty_chart_is_still_valid() {
        let chart = Chart {
            title: "",
            x_label: "",
            y_label: "",
            y_scale: Scale::Linear,
        };
        let svg = chart.render(&[]);
        assert!(svg.contains("</svg>"));
        assert!(!svg.contains("NaN"));
    }
}
