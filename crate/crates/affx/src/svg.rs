//! Minimal SVG line and band plots.

use std::fmt::Write;

use crate::report::Analysis;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

pub struct Line<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub width: f64,
    pub opacity: f64,
    pub ys: &'a [f64],
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    /// Shaded `(lower, upper)` envelope, drawn beneath the lines.
    pub band: Option<(&'a [f64], &'a [f64])>,
    pub lines: Vec<Line<'a>>,
}

fn extent<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot<'_> {
    pub fn render(&self) -> String {
        let (x0, x1) = extent(self.xs.iter());
        let band_vals = self.band.iter().flat_map(|(l, u)| l.iter().chain(u.iter()));
        let (y0, y1) = extent(self.lines.iter().flat_map(|l| l.ys.iter()).chain(band_vals));
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(self.title)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}" stroke="black"/>"#,
            b = H - BOTTOM,
            r = W - RIGHT
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
                px(xv),
                H - BOTTOM + 16.0,
                xv
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
                LEFT - 4.0,
                py(yv) + 4.0,
                yv
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 10.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
            escape(self.y_label),
            y = H / 2.0
        );
        if let Some((lo, hi)) = self.band {
            let mut pts: Vec<String> = self
                .xs
                .iter()
                .zip(hi)
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            pts.extend(
                self.xs
                    .iter()
                    .zip(lo)
                    .rev()
                    .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))),
            );
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="#9ab" fill-opacity="0.35" stroke="none"/>"##,
                pts.join(" ")
            );
        }
        for (k, l) in self.lines.iter().enumerate() {
            let pts: Vec<String> = self
                .xs
                .iter()
                .zip(l.ys)
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="{}"/>"#,
                pts.join(" "),
                l.color,
                l.width,
                l.opacity
            );
            if !l.label.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
                    LEFT + 8.0,
                    TOP + 14.0 * (k as f64 + 1.0),
                    l.color,
                    escape(l.label)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

pub fn figures(a: &Analysis) -> Vec<(String, String)> {
    let episodes: Vec<f64> = (0..a.episodes()).map(|e| e as f64).collect();
    let inc: Vec<f64> = a.census.iter().map(|c| c.increase).collect();
    let dec: Vec<f64> = a.census.iter().map(|c| c.decrease).collect();
    let sta: Vec<f64> = a.census.iter().map(|c| c.stasis).collect();
    let census = Plot {
        title: "Emotion differential per episode (population mean)",
        x_label: "episode",
        y_label: "steps",
        xs: &episodes,
        band: None,
        lines: vec![
            Line {
                label: "increase",
                color: "#c33",
                width: 1.5,
                opacity: 1.0,
                ys: &inc,
            },
            Line {
                label: "decrease",
                color: "#36c",
                width: 1.5,
                opacity: 1.0,
                ys: &dec,
            },
            Line {
                label: "stasis",
                color: "#777",
                width: 1.5,
                opacity: 1.0,
                ys: &sta,
            },
        ],
    };
    let mean: Vec<f64> = a.reward.iter().map(|b| b.mean).collect();
    let lo: Vec<f64> = a.reward.iter().map(|b| b.min).collect();
    let hi: Vec<f64> = a.reward.iter().map(|b| b.max).collect();
    let reward = Plot {
        title: "Cumulative reward per episode",
        x_label: "episode",
        y_label: "reward",
        xs: &episodes,
        band: Some((&lo, &hi)),
        lines: vec![Line {
            label: "mean",
            color: "#234",
            width: 2.0,
            opacity: 1.0,
            ys: &mean,
        }],
    };
    let grid = &a.correlation.mean_curve.grid;
    let mut lines: Vec<Line> = a
        .curves
        .iter()
        .map(|c| Line {
            label: "",
            color: "#888",
            width: 0.8,
            opacity: 0.5,
            ys: &c.values,
        })
        .collect();
    lines.push(Line {
        label: "mean",
        color: "#c33",
        width: 2.5,
        opacity: 1.0,
        ys: &a.correlation.mean_curve.values,
    });
    let behavior = Plot {
        title: "Actor behaviour after learning",
        x_label: "emotion",
        y_label: "exploration rate",
        xs: grid,
        band: None,
        lines,
    };
    let rho = Plot {
        title: "Spearman rho, emotion vs exploration",
        x_label: "episode",
        y_label: "rho",
        xs: &episodes,
        band: None,
        lines: vec![
            Line {
                label: "per episode",
                color: "#36c",
                width: 1.0,
                opacity: 0.4,
                ys: &a.rho,
            },
            Line {
                label: "40-episode window",
                color: "#36c",
                width: 2.5,
                opacity: 1.0,
                ys: &a.rho_windowed,
            },
        ],
    };
    vec![
        ("census.svg".into(), census.render()),
        ("cumulative_reward.svg".into(), reward.render()),
        ("behavior.svg".into(), behavior.render()),
        ("spearman.svg".into(), rho.render()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_escaped_polylines() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 1.0, 1.0];
        let doc = Plot {
            title: "a < b & c",
            x_label: "x",
            y_label: "y",
            xs: &xs,
            band: Some((&ys, &ys)),
            lines: vec![Line {
                label: "flat",
                color: "#000",
                width: 1.0,
                opacity: 1.0,
                ys: &ys,
            }],
        }
        .render();
        assert!(doc.starts_with("<svg") && doc.ends_with("</svg>\n"));
        assert!(doc.contains("a &lt; b &amp; c"));
        assert_eq!(doc.matches("<polyline").count(), 1);
        assert_eq!(doc.matches("<polygon").count(), 1);
        assert!(!doc.contains("NaN"));
    }
}
