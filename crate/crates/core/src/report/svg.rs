//! Minimal static SVG charts. Output depends only on the inputs.

use std::fmt::Write;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 380.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f5fa8", "#c0392b", "#2e8b57", "#7f5aa2"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, y_ticks: &[f64], y_label: &str) {
    let (l, r) = (f.px(f.x0), f.px(f.x1));
    let (b, t) = (f.py(f.y0), f.py(f.y1));
    let _ = writeln!(out, r#"<line x1="{l:.1}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{l:.1}" y1="{b:.1}" x2="{l:.1}" y2="{t:.1}" stroke="black"/>"#);
    for &y in y_ticks {
        let py = f.py(y);
        let _ = writeln!(out, r##"<line x1="{l:.1}" y1="{py:.1}" x2="{r:.1}" y2="{py:.1}" stroke="#dddddd"/>"##);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.2}</text>"#, l - 6.0, py + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 16.0;
        let _ = writeln!(out, r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#, y - 10.0, COLORS[i % COLORS.len()]);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(name));
    }
}

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Step-free polyline chart on `[0, 1] × [0, 1]`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, &ticks(0.0, 1.0, 5), y_label);
    for x in ticks(0.0, 1.0, 10) {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.1}</text>"#, f.px(x), f.py(0.0) + 16.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (f.px(0.0) + f.px(1.0)) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    for (i, (_, pts)) in series.iter().enumerate() {
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.1},{:.1}", f.px(*x), f.py(*y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            COLORS[i % COLORS.len()]
        );
    }
    let names: Vec<&str> = series.iter().map(|s| s.0).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// Grouped bars with symmetric error bars; each series holds `(value, half_width)` per category.
pub fn bar_chart(title: &str, y_label: &str, categories: &[&str], series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    for (_, vals) in series {
        for (v, h) in vals.iter().filter(|(v, h)| v.is_finite() && h.is_finite()) {
            lo = lo.min(v - h);
            hi = hi.max(v + h);
        }
    }
    if hi - lo < 1e-9 {
        lo = -0.01;
        hi = 0.01;
    }
    let pad = 0.1 * (hi - lo);
    let f = Frame { x0: 0.0, x1: categories.len() as f64, y0: lo - pad, y1: hi + pad };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, &ticks(f.y0, f.y1, 5), y_label);
    let zero = f.py(0.0);
    let _ = writeln!(out, r#"<line x1="{:.1}" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke="black" stroke-dasharray="4 3"/>"#, f.px(0.0), f.px(f.x1));
    let slot = 0.8 / series.len().max(1) as f64;
    for (c, name) in categories.iter().enumerate() {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.px(c as f64 + 0.5), HEIGHT - BOTTOM + 18.0, escape(name));
        for (s, (_, vals)) in series.iter().enumerate() {
            let Some(&(v, h)) = vals.get(c) else { continue };
            if !v.is_finite() {
                continue;
            }
            let x0 = f.px(c as f64 + 0.1 + slot * s as f64);
            let x1 = f.px(c as f64 + 0.1 + slot * (s as f64 + 1.0));
            let (top, bottom) = (f.py(v.max(0.0)), f.py(v.min(0.0)));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                x1 - x0 - 2.0,
                bottom - top,
                COLORS[s % COLORS.len()]
            );
            if h.is_finite() && h > 0.0 {
                let xm = (x0 + x1) / 2.0 - 1.0;
                let _ = writeln!(out, r#"<line x1="{xm:.1}" y1="{:.1}" x2="{xm:.1}" y2="{:.1}" stroke="black"/>"#, f.py(v - h), f.py(v + h));
            }
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.0).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}
