//! Minimal standalone SVG line and scatter plots.

use std::fmt::{self, Write as _};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotStyle {
    Line,
    Scatter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series { name: name.into(), x, y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub style: PlotStyle,
    pub series: Vec<Series>,
    /// Plot `log10 |y|` instead of `y`.
    pub log_y: bool,
}

impl Plot {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        style: PlotStyle,
    ) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            style,
            series: Vec::new(),
            log_y: false,
        }
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotError(pub String);

impl fmt::Display for PlotError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "plot error: {}", self.0)
    }
}

impl std::error::Error for PlotError {}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Renders the plot as an SVG document. Output depends only on the input.
pub fn render_plot(plot: &Plot) -> Result<String, PlotError> {
    if plot.series.is_empty() {
        return Err(PlotError("no series to plot".into()));
    }
    let mut ys = Vec::with_capacity(plot.series.len());
    for s in &plot.series {
        if s.x.is_empty() {
            return Err(PlotError(format!("series `{}` is empty", s.name)));
        }
        if s.x.len() != s.y.len() {
            return Err(PlotError(format!(
                "series `{}` has {} x values and {} y values",
                s.name,
                s.x.len(),
                s.y.len()
            )));
        }
        let y: Vec<f64> =
            if plot.log_y { s.y.iter().map(|v| v.abs().max(f64::MIN_POSITIVE).log10()).collect() } else { s.y.clone() };
        if s.x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(PlotError(format!("series `{}` contains non-finite values", s.name)));
        }
        ys.push(y);
    }
    let (x0, x1) = range(plot.series.iter().flat_map(|s| s.x.iter().copied()));
    let (y0, y1) = range(ys.iter().flatten().copied());
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        w,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&plot.title)
    )
    .unwrap();
    writeln!(w, r#"<g stroke="black" stroke-width="1" fill="none">"#).unwrap();
    writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#).unwrap();
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (tx, ty) = (LEFT + f * pw, TOP + ph - f * ph);
        writeln!(w, r#"<line x1="{tx:.1}" y1="{:.1}" x2="{tx:.1}" y2="{:.1}"/>"#, TOP + ph, TOP + ph + 5.0).unwrap();
        writeln!(w, r#"<line x1="{:.1}" y1="{ty:.1}" x2="{LEFT}" y2="{ty:.1}"/>"#, LEFT - 5.0).unwrap();
    }
    writeln!(w, "</g>").unwrap();
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (tx, ty) = (LEFT + f * pw, TOP + ph - f * ph);
        writeln!(
            w,
            r#"<text x="{tx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 20.0,
            tick_label(x0 + f * (x1 - x0))
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            ty + 4.0,
            tick_label(y0 + f * (y1 - y0))
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    )
    .unwrap();
    let y_label = if plot.log_y { format!("log10 {}", plot.y_label) } else { plot.y_label.clone() };
    writeln!(
        w,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&y_label)
    )
    .unwrap();

    for (k, (s, y)) in plot.series.iter().zip(&ys).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match plot.style {
            PlotStyle::Line => {
                let pts: Vec<String> = s.x.iter().zip(y).map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b))).collect();
                writeln!(
                    w,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                )
                .unwrap();
            }
            PlotStyle::Scatter => {
                writeln!(w, r#"<g fill="{color}" fill-opacity="0.7">"#).unwrap();
                for (&a, &b) in s.x.iter().zip(y) {
                    writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#, px(a), py(b)).unwrap();
                }
                writeln!(w, "</g>").unwrap();
            }
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        writeln!(w, r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="4" fill="{color}"/>"#, ly - 2.0).unwrap();
        writeln!(w, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 20.0, ly + 4.0, escape(&s.name)).unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}
