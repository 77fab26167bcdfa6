//! Minimal static SVG charts. Output depends only on the inputs, so plots
//! are byte-stable across runs.

use std::fmt::Write;

const H: f64 = 320.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const LEFT: f64 = 60.0;
const SLOT: f64 = 70.0;
const COLORS: [&str; 4] = ["#4472c4", "#ed7d31", "#70ad47", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct BoxItem {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    out: String,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn new(title: &str, slots: usize, (lo, hi): (f64, f64), ticks: &[f64]) -> Self {
        let w = LEFT + SLOT * slots.max(1) as f64 + 20.0;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{H:.0}" viewBox="0 0 {w:.0} {H:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{w:.0}" height="{H:.0}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
        let mut f = Frame { out, lo, hi };
        let x1 = w - 20.0;
        for &t in ticks {
            let y = f.y(t);
            let _ = writeln!(f.out, r##"<line x1="{LEFT:.1}" y1="{y:.2}" x2="{x1:.1}" y2="{y:.2}" stroke="#dddddd"/>"##);
            let _ = writeln!(f.out, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t));
        }
        let _ = writeln!(f.out, r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="black"/>"#, H - BOTTOM);
        f
    }

    fn y(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo { self.hi - self.lo } else { 1.0 };
        let v = v.clamp(self.lo, self.hi);
        H - BOTTOM - (v - self.lo) / span * (H - TOP - BOTTOM)
    }

    fn label(&mut self, slot: usize, text: &str) {
        let x = LEFT + SLOT * (slot as f64 + 0.5);
        let y = H - BOTTOM + 14.0;
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="end" transform="rotate(-30 {x:.1} {y:.1})">{}</text>"#,
            escape(text)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick_label(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{t:.0}")
    } else {
        format!("{t:.2}")
    }
}

fn even_ticks((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Box-and-whisker chart; the mean is drawn as a diamond.
pub fn boxplot(title: &str, range: (f64, f64), items: &[BoxItem]) -> String {
    let ticks: Vec<f64> = (range.0.ceil() as i64..=range.1.floor() as i64).map(|v| v as f64).collect();
    let mut f = Frame::new(title, items.len(), range, &ticks);
    for (i, b) in items.iter().enumerate() {
        let cx = LEFT + SLOT * (i as f64 + 0.5);
        let half = SLOT * 0.25;
        let (ymin, yq1, ymed, yq3, ymax, ymean) = (f.y(b.min), f.y(b.q1), f.y(b.median), f.y(b.q3), f.y(b.max), f.y(b.mean));
        let _ = writeln!(f.out, r#"<line x1="{cx:.1}" y1="{ymax:.2}" x2="{cx:.1}" y2="{yq3:.2}" stroke="black"/>"#);
        let _ = writeln!(f.out, r#"<line x1="{cx:.1}" y1="{yq1:.2}" x2="{cx:.1}" y2="{ymin:.2}" stroke="black"/>"#);
        for y in [ymin, ymax] {
            let _ = writeln!(f.out, r#"<line x1="{:.1}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="black"/>"#, cx - half / 2.0, cx + half / 2.0);
        }
        let _ = writeln!(
            f.out,
            r#"<rect x="{:.1}" y="{yq3:.2}" width="{:.1}" height="{:.2}" fill="{}" fill-opacity="0.6" stroke="black"/>"#,
            cx - half,
            2.0 * half,
            (yq1 - yq3).max(0.0),
            COLORS[0]
        );
        let _ = writeln!(f.out, r#"<line x1="{:.1}" y1="{ymed:.2}" x2="{:.1}" y2="{ymed:.2}" stroke="black" stroke-width="2"/>"#, cx - half, cx + half);
        let _ = writeln!(
            f.out,
            r#"<path d="M {cx:.1} {:.2} l 4 4 l -4 4 l -4 -4 z" fill="white" stroke="black"/>"#,
            ymean - 4.0
        );
        f.label(i, &b.label);
    }
    f.finish()
}

/// Grouped bar chart, one bar per series within each category.
pub fn bars(title: &str, range: (f64, f64), categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut f = Frame::new(title, categories.len(), range, &even_ticks(range, 4));
    let base = f.y(0.0_f64.clamp(range.0, range.1));
    let k = series.len().max(1) as f64;
    let bw = SLOT * 0.7 / k;
    for (i, cat) in categories.iter().enumerate() {
        let x0 = LEFT + SLOT * i as f64 + SLOT * 0.15;
        for (j, (_, values)) in series.iter().enumerate() {
            let Some(&v) = values.get(i) else { continue };
            let y = f.y(v);
            let (top, h) = if y < base { (y, base - y) } else { (base, y - base) };
            let _ = writeln!(
                f.out,
                r#"<rect x="{:.1}" y="{top:.2}" width="{bw:.1}" height="{h:.2}" fill="{}"/>"#,
                x0 + bw * j as f64,
                COLORS[j % COLORS.len()]
            );
        }
        f.label(i, cat);
    }
    let _ = writeln!(
        f.out,
        r#"<line x1="{LEFT:.1}" y1="{base:.2}" x2="{:.1}" y2="{base:.2}" stroke="black"/>"#,
        LEFT + SLOT * categories.len().max(1) as f64
    );
    if series.len() > 1 {
        for (j, (name, _)) in series.iter().enumerate() {
            let x = LEFT + 10.0 + 110.0 * j as f64;
            let _ = writeln!(f.out, r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/>"#, TOP - 14.0, COLORS[j % COLORS.len()]);
            let _ = writeln!(f.out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 14.0, TOP - 5.0, escape(name));
        }
    }
    f.finish()
}
