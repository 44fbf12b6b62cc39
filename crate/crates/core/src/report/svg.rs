//! Static SVG figures drawn from rect/path/text primitives.

use std::fmt::Write as _;

use super::{CorrelationMatrix, ModelProfile, PRIMARY_METRICS};
use crate::lexmetrics::Metric;
use crate::stats::{self, DensityCurve};

pub struct Layout {
    pub margin: f64,
    pub title_height: f64,
    pub panel_width: f64,
    pub panel_height: f64,
    pub panel_gap: f64,
    pub label_width: f64,
    pub ridge_row_height: f64,
    pub ridge_overlap: f64,
    pub scatter_cell: f64,
    pub point_radius: f64,
    pub font_size: f64,
    pub kde_grid: usize,
    pub palette: &'static [&'static str],
}

pub const LAYOUT: Layout = Layout {
    margin: 40.0,
    title_height: 30.0,
    panel_width: 260.0,
    panel_height: 200.0,
    panel_gap: 30.0,
    label_width: 120.0,
    ridge_row_height: 40.0,
    ridge_overlap: 1.6,
    scatter_cell: 220.0,
    point_radius: 2.5,
    font_size: 12.0,
    kde_grid: stats::DEFAULT_KDE_GRID,
    palette: &[
        "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
    ],
};

fn color(i: usize) -> &'static str {
    LAYOUT.palette[i % LAYOUT.palette.len()]
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => {}
            c => out.push(c),
        }
    }
    out
}

/// Fixed two-decimal coordinates keep output byte-stable.
fn f(v: f64) -> String {
    let v = if v.is_finite() { v } else { 0.0 };
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="{fs}">"#,
            w = f(width),
            h = f(height),
            fs = f(LAYOUT.font_size)
        );
        let _ = writeln!(
            body,
            r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
            f(width),
            f(height)
        );
        let mut svg = Svg { body };
        svg.text(
            width / 2.0,
            LAYOUT.margin * 0.6,
            "middle",
            title,
            Some(LAYOUT.font_size + 2.0),
        );
        svg
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str, size: Option<f64>) {
        let size = size
            .map(|s| format!(r#" font-size="{}""#, f(s)))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="{anchor}"{size}>{}</text>"#,
            f(x),
            f(y),
            escape(s)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: Option<&str>) {
        let stroke = stroke
            .map(|s| format!(r#" stroke="{s}""#))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"{stroke}/>"#,
            f(x),
            f(y),
            f(w.max(0.0)),
            f(h.max(0.0))
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<path d="M{},{} L{},{}" stroke="{stroke}" fill="none"/>"#,
            f(x1),
            f(y1),
            f(x2),
            f(y2)
        );
    }

    fn path(&mut self, points: &[(f64, f64)], fill: &str, stroke: &str, closed: bool) {
        let mut d = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            let _ = write!(d, "{}{},{} ", if i == 0 { 'M' } else { 'L' }, f(*x), f(*y));
        }
        if closed {
            d.push('Z');
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="{fill}" fill-opacity="0.6" stroke="{stroke}"/>"#,
            d.trim_end()
        );
    }

    fn circle(&mut self, x: f64, y: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="0.7"/>"#,
            f(x),
            f(y),
            f(LAYOUT.point_radius)
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Linear map of `[lo, hi]` onto `[a, b]`; a zero-width domain maps to the midpoint.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn extent(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values.into_iter().fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Pooled lexical measures, one panel per measure with one bar per model.
pub fn lexical_bars(profiles: &[ModelProfile]) -> String {
    type Measure = (&'static str, fn(&ModelProfile) -> Option<f64>);
    let measures: [Measure; 3] = [
        ("pooled Yule's K", |p| p.pooled_yules_k),
        ("pooled hapax ratio", |p| p.pooled_hapax_ratio),
        ("vocabulary size", |p| Some(p.vocabulary_size as f64)),
    ];
    let l = &LAYOUT;
    let width =
        2.0 * l.margin + measures.len() as f64 * (l.panel_width + l.panel_gap) - l.panel_gap;
    let height = 2.0 * l.margin + l.title_height + l.panel_height + l.font_size * 2.0;
    let mut svg = Svg::new(width, height, "Lexical sophistication by model");
    let slots = profiles.len().max(1) as f64;

    for (k, (label, value)) in measures.iter().enumerate() {
        let x0 = l.margin + k as f64 * (l.panel_width + l.panel_gap);
        let y0 = l.margin + l.title_height;
        let base = y0 + l.panel_height;
        svg.text(x0 + l.panel_width / 2.0, y0 - 8.0, "middle", label, None);
        svg.rect(
            x0,
            y0,
            l.panel_width,
            l.panel_height,
            "none",
            Some("#cccccc"),
        );
        let top = profiles.iter().filter_map(value).fold(0.0_f64, f64::max);
        let bar_w = l.panel_width / slots * 0.7;
        for (i, p) in profiles.iter().enumerate() {
            let cx = x0 + (i as f64 + 0.5) * l.panel_width / slots;
            match value(p) {
                Some(v) => {
                    let h = if top > 0.0 {
                        v / top * (l.panel_height - l.font_size * 1.5)
                    } else {
                        0.0
                    };
                    svg.rect(cx - bar_w / 2.0, base - h, bar_w, h, color(i), None);
                    svg.text(
                        cx,
                        base - h - 3.0,
                        "middle",
                        &format!("{v:.2}"),
                        Some(l.font_size - 2.0),
                    );
                }
                None => svg.text(cx, base - 3.0, "middle", "n/a", Some(l.font_size - 2.0)),
            }
            svg.text(
                cx,
                base + l.font_size + 2.0,
                "middle",
                &p.model,
                Some(l.font_size - 2.0),
            );
        }
    }
    svg.finish()
}

/// Density of `metric` for each profile; `None` where the estimate is degenerate.
pub fn ridge_curves(
    profiles: &[ModelProfile],
    metric: Metric,
) -> Vec<(Vec<f64>, Option<DensityCurve>)> {
    profiles
        .iter()
        .map(|p| {
            let values = p.values(metric);
            let curve = stats::kde_density(&values, LAYOUT.kde_grid).ok();
            (values, curve)
        })
        .collect()
}

pub fn ridge_plots(profiles: &[ModelProfile], metrics: &[Metric]) -> String {
    let l = &LAYOUT;
    let rows = profiles.len().max(1) as f64;
    let panel_h = rows * l.ridge_row_height + l.ridge_row_height * l.ridge_overlap;
    let cols = 3usize;
    let grid_rows = metrics.len().div_ceil(cols).max(1);
    let cell_w = l.label_width + l.panel_width + l.panel_gap;
    let cell_h = l.title_height + panel_h + l.panel_gap;
    let width = 2.0 * l.margin + cols as f64 * cell_w;
    let height = 2.0 * l.margin + grid_rows as f64 * cell_h;
    let mut svg = Svg::new(width, height, "Metric distributions by model");

    for (k, &metric) in metrics.iter().enumerate() {
        let x0 = l.margin + (k % cols) as f64 * cell_w + l.label_width;
        let y0 = l.margin + (k / cols) as f64 * cell_h + l.title_height;
        svg.text(
            x0 + l.panel_width / 2.0,
            y0 - 6.0,
            "middle",
            metric.name(),
            None,
        );
        let curves = ridge_curves(profiles, metric);
        let Some((lo, hi)) = extent(curves.iter().flat_map(|(v, c)| {
            let from_curve = c.iter().flat_map(|c| [c.xs[0], c.xs[c.xs.len() - 1]]);
            v.iter().copied().chain(from_curve)
        })) else {
            svg.text(
                x0 + l.panel_width / 2.0,
                y0 + panel_h / 2.0,
                "middle",
                "no data",
                None,
            );
            continue;
        };
        let peak = curves
            .iter()
            .filter_map(|(_, c)| c.as_ref())
            .flat_map(|c| c.ys.iter().copied())
            .fold(0.0_f64, f64::max);
        let amp = l.ridge_row_height * l.ridge_overlap;

        for (i, (p, (values, curve))) in profiles.iter().zip(&curves).enumerate() {
            let baseline = y0 + amp + i as f64 * l.ridge_row_height;
            svg.text(x0 - 6.0, baseline, "end", &p.model, Some(l.font_size - 2.0));
            svg.line(x0, baseline, x0 + l.panel_width, baseline, "#999999");
            match curve {
                Some(c) => {
                    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(c.xs.len() + 2);
                    pts.push((scale(c.xs[0], lo, hi, x0, x0 + l.panel_width), baseline));
                    for (&x, &y) in c.xs.iter().zip(&c.ys) {
                        let py = if peak > 0.0 { y / peak * amp } else { 0.0 };
                        pts.push((scale(x, lo, hi, x0, x0 + l.panel_width), baseline - py));
                    }
                    pts.push((
                        scale(c.xs[c.xs.len() - 1], lo, hi, x0, x0 + l.panel_width),
                        baseline,
                    ));
                    svg.path(&pts, color(i), "#333333", true);
                }
                None => {
                    for &v in values {
                        svg.circle(
                            scale(v, lo, hi, x0, x0 + l.panel_width),
                            baseline - l.point_radius,
                            color(i),
                        );
                    }
                }
            }
        }
        let axis_y = y0 + amp + (rows - 1.0) * l.ridge_row_height + l.font_size + 2.0;
        svg.text(
            x0,
            axis_y,
            "start",
            &format!("{lo:.2}"),
            Some(l.font_size - 2.0),
        );
        svg.text(
            x0 + l.panel_width,
            axis_y,
            "end",
            &format!("{hi:.2}"),
            Some(l.font_size - 2.0),
        );
    }
    svg.finish()
}

/// Pairwise scatter of the primary metrics with Pearson r per panel.
pub fn scatter_matrix(profiles: &[ModelProfile], correlations: &CorrelationMatrix) -> String {
    let l = &LAYOUT;
    let pairs: Vec<(Metric, Metric)> = PRIMARY_METRICS
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| PRIMARY_METRICS[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let cols = 3usize;
    let grid_rows = pairs.len().div_ceil(cols);
    let cell = l.scatter_cell;
    let legend_h = l.font_size * 2.0;
    let width = 2.0 * l.margin + cols as f64 * (cell + l.panel_gap);
    let height =
        2.0 * l.margin + legend_h + grid_rows as f64 * (cell + l.title_height + l.panel_gap);
    let mut svg = Svg::new(width, height, "Relationships between primary metrics");

    for (i, p) in profiles.iter().enumerate() {
        let x = l.margin + i as f64 * 120.0;
        svg.rect(x, l.margin, 10.0, 10.0, color(i), None);
        svg.text(
            x + 14.0,
            l.margin + 10.0,
            "start",
            &p.model,
            Some(l.font_size - 2.0),
        );
    }

    for (k, &(mx, my)) in pairs.iter().enumerate() {
        let x0 = l.margin + (k % cols) as f64 * (cell + l.panel_gap);
        let y0 = l.margin
            + legend_h
            + l.title_height
            + (k / cols) as f64 * (cell + l.title_height + l.panel_gap);
        let r = correlations
            .get(mx, my)
            .map(|r| format!("r = {r:.3}"))
            .unwrap_or_else(|| "r = n/a".into());
        svg.text(
            x0 + cell / 2.0,
            y0 - 6.0,
            "middle",
            &format!("{} vs {} ({r})", my.name(), mx.name()),
            Some(l.font_size - 2.0),
        );
        svg.rect(x0, y0, cell, cell, "none", Some("#cccccc"));

        let points: Vec<(usize, f64, f64)> = profiles
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                p.vectors
                    .iter()
                    .filter_map(move |s| Some((i, s.metrics.get(mx)?, s.metrics.get(my)?)))
            })
            .collect();
        let (Some((xlo, xhi)), Some((ylo, yhi))) = (
            extent(points.iter().map(|p| p.1)),
            extent(points.iter().map(|p| p.2)),
        ) else {
            continue;
        };
        let pad = l.point_radius * 2.0;
        for (i, x, y) in points {
            svg.circle(
                scale(x, xlo, xhi, x0 + pad, x0 + cell - pad),
                scale(y, ylo, yhi, y0 + cell - pad, y0 + pad),
                color(i),
            );
        }
    }
    svg.finish()
}
