//! Minimal standalone SVG charts: an 800×500 canvas, one frame, ticks at
//! the quartiles of each axis range.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Data-to-pixel map for one chart.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
                (lo - pad, hi + pad)
            }
        };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str, xticks: bool) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let yv = f.y.0 + q * (f.y.1 - f.y.0);
        let py = f.py(yv);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            fmt_tick(yv)
        );
        if xticks {
            let xv = f.x.0 + q * (f.x.1 - f.x.0);
            let px = f.px(xv);
            let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(
                out,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 20.0,
                fmt_tick(xv)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Single-series line chart.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64]) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let (mut xr, mut yr) = (range(x.iter().copied()), range(y.iter().copied()));
    if !xr.0.is_finite() {
        xr = (0.0, 1.0);
    }
    if !yr.0.is_finite() {
        yr = (0.0, 1.0);
    }
    let frame = Frame::new(xr, yr);
    axes(&mut out, &frame, xlabel, ylabel, true);
    if frame.y.0 < 0.0 && frame.y.1 > 0.0 {
        let py = frame.py(0.0);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
            frame.px(frame.x.0),
            frame.px(frame.x.1)
        );
    }
    let pts: Vec<String> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| format!("{:.2},{:.2}", frame.px(*a), frame.py(*b)))
        .collect();
    let _ = writeln!(out, r#"<polyline fill="none" stroke="firebrick" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
    out.push_str("</svg>\n");
    out
}

/// Five-number summary drawn as one box.
#[derive(Debug, Clone)]
pub struct BoxStats {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn box_chart(title: &str, ylabel: &str, boxes: &[BoxStats]) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let mut yr = range(boxes.iter().flat_map(|b| [b.min, b.max]));
    if !yr.0.is_finite() {
        yr = (0.0, 1.0);
    }
    let n = boxes.len().max(1) as f64;
    let frame = Frame::new((0.0, n), yr);
    axes(&mut out, &frame, "", ylabel, false);
    let colors = ["firebrick", "steelblue", "seagreen", "darkorange"];
    let slot = (frame.px(1.0) - frame.px(0.0)) * 0.5;
    for (i, b) in boxes.iter().enumerate() {
        let cx = frame.px(i as f64 + 0.5);
        let half = slot / 2.0;
        let color = colors[i % colors.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            frame.py(b.min),
            frame.py(b.max)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.5" stroke="black"/>"#,
            cx - half,
            frame.py(b.q3),
            slot,
            (frame.py(b.q1) - frame.py(b.q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            y = frame.py(b.median)
        );
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 20.0,
            escape(&b.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
