//! Minimal SVG 1.1 chart writer. Output depends only on the inputs, so
//! reports are byte-stable.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// Plot area with linear axes.
pub struct Plot {
    body: String,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    legend: Vec<(String, &'static str)>,
}

impl Plot {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Plot {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Plot {
            body: String::new(),
            x0,
            x1,
            y0,
            y1,
            legend: Vec::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn polyline(&mut self, name: &str, pts: &[(f64, f64)], stroke: &'static str) {
        let p = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="2" points="{p}"/>"#
        );
        self.legend.push((name.to_string(), stroke));
    }

    pub fn polygon(&mut self, name: &str, pts: &[(f64, f64)], fill: &'static str) {
        let p = self.points(pts);
        let _ = writeln!(
            self.body,
            r#"<polygon fill="{fill}" stroke="none" points="{p}"/>"#
        );
        self.legend.push((name.to_string(), fill));
    }

    pub fn dot(&mut self, x: f64, y: f64, title: &str) {
        let _ = writeln!(
            self.body,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"><title>{}</title></circle>"##,
            self.px(x),
            self.py(y),
            escape(title)
        );
    }

    /// Renders the document. `y_tick` formats a tick value for display.
    pub fn finish(
        self,
        title: &str,
        x_label: &str,
        y_label: &str,
        x_ticks: &[f64],
        y_ticks: &[f64],
        y_tick: impl Fn(f64) -> String,
    ) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(title)
        );
        let (bx, by) = (LEFT, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r#"<path d="M{bx:.2},{TOP:.2} V{by:.2} H{:.2}" fill="none" stroke="black"/>"#,
            WIDTH - RIGHT
        );
        for &t in x_ticks {
            let x = self.px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{by:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                by + 5.0,
                by + 19.0,
                t
            );
        }
        for &t in y_ticks {
            let y = self.py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                bx,
                WIDTH - RIGHT,
                bx - 6.0,
                y + 4.0,
                escape(&y_tick(t))
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (TOP + HEIGHT - BOTTOM) / 2.0,
            escape(y_label)
        );
        s.push_str(&self.body);
        for (i, (name, c)) in self.legend.iter().enumerate() {
            let y = TOP + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{c}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                WIDTH - RIGHT + 12.0,
                y,
                WIDTH - RIGHT + 27.0,
                y + 9.0,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Integer ticks covering `[a, b]`, at most about ten of them.
pub fn int_ticks(a: f64, b: f64) -> Vec<f64> {
    let (a, b) = (a.floor() as i64, b.ceil() as i64);
    let step = ((b - a) / 10 + 1).max(1);
    (a..=b).step_by(step as usize).map(|v| v as f64).collect()
}
