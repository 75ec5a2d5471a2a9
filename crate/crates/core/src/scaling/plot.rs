//! Minimal SVG log-log plots. Output depends only on the values passed in,
//! which are always the ones read back from the exported CSV files.

use std::fmt::Write;

use super::{BinnedCurve, FitRecord};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Option<Frame> {
        let (x0, x1) = log_range(xs)?;
        let (y0, y1) = log_range(ys)?;
        Some(Frame { x0, x1, y0, y1 })
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x.log10() - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y.log10() - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Whole decades enclosing the positive values.
fn log_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, v| {
            let l = v.log10();
            Some(acc.map_or((l, l), |(a, b)| (a.min(l), b.max(l))))
        })?;
    let lo = lo.floor();
    let hi = if hi.ceil() > lo { hi.ceil() } else { lo + 1.0 };
    Some((lo, hi))
}

fn axes(svg: &mut String, frame: &Frame, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        svg,
        r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN
    );
    for d in (frame.x0 as i64)..=(frame.x1 as i64) {
        let x = frame.px(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{t:.2}" stroke="black"/><text x="{x:.2}" y="{l:.2}" font-size="12" text-anchor="middle">1e{d}</text>"#,
            b = HEIGHT - MARGIN,
            t = HEIGHT - MARGIN + 5.0,
            l = HEIGHT - MARGIN + 20.0
        );
    }
    for d in (frame.y0 as i64)..=(frame.y1 as i64) {
        let y = frame.py(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            r#"<line x1="{a:.2}" y1="{y:.2}" x2="{m:.2}" y2="{y:.2}" stroke="black"/><text x="{l:.2}" y="{ty:.2}" font-size="12" text-anchor="end">1e{d}</text>"#,
            a = MARGIN - 5.0,
            m = MARGIN,
            l = MARGIN - 8.0,
            ty = y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{cx:.2}" y="30" font-size="16" text-anchor="middle">{t}</text>"#,
        cx = WIDTH / 2.0,
        t = escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{cx:.2}" y="{y:.2}" font-size="13" text-anchor="middle">{t}</text>"#,
        cx = WIDTH / 2.0,
        y = HEIGHT - 15.0,
        t = escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{cy:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {cy:.2})">{t}</text>"#,
        cy = HEIGHT / 2.0,
        t = escape(ylabel)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Bin means (red) and medians (magenta) on log-log axes, with the fitted
/// power law as a dotted blue line.
pub fn curve_svg(title: &str, ylabel: &str, curve: &BinnedCurve, fit: Option<&FitRecord>) -> String {
    let mut svg = header();
    let ys = curve.bins.iter().flat_map(|b| [b.mean, b.median]);
    let Some(frame) = Frame::new(curve.bins.iter().map(|b| b.center), ys) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    axes(&mut svg, &frame, title, "N_aut", ylabel);

    for (color, pick) in [("red", 0usize), ("magenta", 1)] {
        let pts: Vec<String> = curve
            .bins
            .iter()
            .filter_map(|b| {
                let v = if pick == 0 { b.mean } else { b.median };
                (v > 0.0).then(|| format!("{:.2},{:.2}", frame.px(b.center), frame.py(v)))
            })
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        for p in &pts {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
    }

    if let Some(f) = fit {
        let xa = 10f64.powf(frame.x0);
        let xb = 10f64.powf(frame.x1);
        let ya = f.amplitude * xa.powf(f.exponent);
        let yb = f.amplitude * xb.powf(f.exponent);
        if ya > 0.0 && yb > 0.0 && ya.is_finite() && yb.is_finite() {
            let _ = writeln!(
                svg,
                r#"<clipPath id="plot"><rect x="{m}" y="{m}" width="{w}" height="{h}"/></clipPath>"#,
                m = MARGIN,
                w = WIDTH - 2.0 * MARGIN,
                h = HEIGHT - 2.0 * MARGIN
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="blue" stroke-dasharray="4 4" clip-path="url(#plot)"/>"#,
                frame.px(xa),
                frame.py(ya),
                frame.px(xb),
                frame.py(yb)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="13" fill="blue">p = {p:.3} ± {e:.3} ({est})</text>"#,
            x = MARGIN + 10.0,
            y = MARGIN + 20.0,
            p = f.exponent,
            e = f.stderr,
            est = f.estimator
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Histogram of `(size, count)` pairs on log-log axes.
pub fn histogram_svg(title: &str, rows: &[(u64, u64)]) -> String {
    let mut svg = header();
    let Some(frame) = Frame::new(
        rows.iter().map(|r| r.0 as f64),
        rows.iter().map(|r| r.1 as f64),
    ) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    axes(&mut svg, &frame, title, "N_aut", "collaborations");
    for &(size, count) in rows {
        if size == 0 || count == 0 {
            continue;
        }
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            frame.px(size as f64),
            frame.py(count as f64)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
