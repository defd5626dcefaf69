//! Self-contained static SVG plots: line or step series and boolean-style
//! heat maps. No external assets, fonts or scripts.

use std::fmt::Write;

use anyhow::{bail, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Straight segments between samples.
    Line,
    /// Piecewise-constant: each value holds until the next sample.
    Step,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: &[f64], ys: &[f64], style: Style) -> Self {
        Self {
            label: label.into(),
            points: xs.iter().copied().zip(ys.iter().copied()).collect(),
            style,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Fixed y range; otherwise taken from the finite data.
    pub y_range: Option<(f64, f64)>,
}

/// Linear map from data to pixel coordinates inside the plot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Axes {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        let y = y.clamp(self.y.0, self.y.1);
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn header(out: &mut String, plot: &Plot) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x_label)
    );
    let cy = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{}</text>"#,
        escape(&plot.y_label)
    );
}

fn frame(out: &mut String, axes: &Axes) {
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for (v, anchor, x, y) in [
        (axes.x.0, "start", LEFT, HEIGHT - BOTTOM + 16.0),
        (axes.x.1, "end", WIDTH - RIGHT, HEIGHT - BOTTOM + 16.0),
        (axes.y.0, "end", LEFT - 6.0, HEIGHT - BOTTOM),
        (axes.y.1, "end", LEFT - 6.0, TOP + 4.0),
    ] {
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v));
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn computed_axes(plot: &Plot, series: &[Series]) -> Result<Axes> {
    let points = || series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let Some(x) = extent(points().map(|p| p.0)) else {
        bail!("nothing to plot: no finite data points");
    };
    let y = match plot.y_range {
        Some(r) => r,
        None => extent(points().map(|p| p.1)).expect("x extent implies a point"),
    };
    Ok(Axes::new(x, y))
}

/// One polyline per line series and one path per step series. Non-finite
/// samples are skipped.
pub fn render_lines(plot: &Plot, series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        bail!("nothing to plot: empty series");
    }
    let axes = computed_axes(plot, series)?;
    render_lines_on(plot, series, &axes)
}

/// Axes [`render_lines`] would use for these series.
pub fn line_axes(plot: &Plot, series: &[Series]) -> Result<Axes> {
    computed_axes(plot, series)
}

fn render_lines_on(plot: &Plot, series: &[Series], axes: &Axes) -> Result<String> {
    let mut out = String::new();
    header(&mut out, plot);
    frame(&mut out, axes);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| (axes.px(x), axes.py(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        match s.style {
            Style::Line => {
                let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                    coords.join(" "),
                    escape(&s.label)
                );
            }
            Style::Step => {
                let mut d = format!("M{:.2} {:.2}", pts[0].0, pts[0].1);
                let mut level = pts[0].1;
                for &(x, y) in &pts[1..] {
                    let _ = write!(d, " H{x:.2}");
                    if y != level {
                        let _ = write!(d, " V{y:.2}");
                        level = y;
                    }
                }
                let _ = writeln!(
                    out,
                    r#"<path class="step" fill="none" stroke="{color}" stroke-width="1.5" d="{d}"><title>{}</title></path>"#,
                    escape(&s.label)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - RIGHT - 6.0,
            TOP + 16.0 + 14.0 * k as f64,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Colour-coded grid: `values[row * xs.len() + column]` in `[0, 1]`, rows
/// along `ys`. Non-finite values are drawn grey.
pub fn render_heatmap(plot: &Plot, xs: &[f64], ys: &[f64], values: &[f64]) -> Result<String> {
    if xs.is_empty() || ys.is_empty() {
        bail!("nothing to plot: empty grid");
    }
    if values.len() != xs.len() * ys.len() {
        bail!("heat map needs {} values, got {}", xs.len() * ys.len(), values.len());
    }
    let mut out = String::new();
    header(&mut out, plot);
    let axes = Axes::new(
        (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    );
    let cw = (WIDTH - LEFT - RIGHT) / xs.len() as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / ys.len() as f64;
    for (r, y) in ys.iter().enumerate() {
        for (c, x) in xs.iter().enumerate() {
            let v = values[r * xs.len() + c];
            let fill = if v.is_finite() {
                let v = v.clamp(0.0, 1.0);
                // White to dark red.
                let g = (255.0 * (1.0 - 0.85 * v)).round() as u8;
                let rch = (255.0 * (1.0 - 0.3 * v)).round() as u8;
                format!("#{rch:02x}{g:02x}{g:02x}")
            } else {
                "#bbbbbb".to_string()
            };
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}"><title>{x}, {y}: {v}</title></rect>"#,
                LEFT + c as f64 * cw,
                HEIGHT - BOTTOM - (r + 1) as f64 * ch,
            );
        }
    }
    frame(&mut out, &axes);
    out.push_str("</svg>\n");
    Ok(out)
}
