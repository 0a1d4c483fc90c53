//! Minimal SVG charts: scatter with error bars, polylines, histograms.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<[f64; 2]>,
    /// Symmetric x and y error half-widths per point.
    pub errors: Vec<[f64; 2]>,
    pub line: bool,
    pub markers: bool,
}

impl Series {
    pub fn scatter(label: &str, color: &str, points: Vec<[f64; 2]>) -> Self {
        Series { label: label.into(), color: color.into(), points, errors: Vec::new(), line: false, markers: true }
    }

    pub fn line(label: &str, color: &str, points: Vec<[f64; 2]>) -> Self {
        Series { label: label.into(), color: color.into(), points, errors: Vec::new(), line: true, markers: false }
    }

    pub fn with_errors(mut self, errors: Vec<[f64; 2]>) -> Self {
        self.errors = errors;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
    /// Vertical bars `(x0, x1, height)` drawn beneath the series.
    pub bars: Vec<(f64, f64, f64, String)>,
    pub identity_line: bool,
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const MARGIN: [f64; 4] = [70.0, 20.0, 40.0, 60.0]; // left, right, top, bottom

pub const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#d62728", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, scale: Scale) -> Axis {
        let v: Vec<f64> = values.filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0)).collect();
        let (mut lo, mut hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        match scale {
            Scale::Linear => {
                let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
                Axis { lo: lo - pad, hi: hi + pad, scale }
            }
            Scale::Log => {
                let (a, b) = (lo.log10(), hi.log10());
                let pad = if b > a { 0.05 * (b - a) } else { 0.5 };
                Axis { lo: a - pad, hi: b + pad, scale }
            }
        }
    }

    fn t(&self, v: f64) -> f64 {
        let v = match self.scale {
            Scale::Linear => v,
            Scale::Log => v.max(1e-300).log10(),
        };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut v = (self.lo / step).ceil() * step;
        while v <= self.hi + 1e-9 * span {
            let label = match self.scale {
                Scale::Linear => format_number(v),
                Scale::Log => format_number(10f64.powf(v)),
            };
            let raw = match self.scale {
                Scale::Linear => v,
                Scale::Log => 10f64.powf(v),
            };
            out.push((raw, label));
            v += step;
        }
        out
    }
}

fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: Vec::new(),
            bars: Vec::new(),
            identity_line: false,
        }
    }

    pub fn render(&self) -> String {
        let xs = self
            .series
            .iter()
            .flat_map(|s| {
                s.points.iter().enumerate().flat_map(move |(i, p)| {
                    let e = s.errors.get(i).map_or(0.0, |e| e[0]);
                    [p[0] - e, p[0] + e, p[0]]
                })
            })
            .chain(self.bars.iter().flat_map(|b| [b.0, b.1]));
        let ys = self
            .series
            .iter()
            .flat_map(|s| {
                s.points.iter().enumerate().flat_map(move |(i, p)| {
                    let e = s.errors.get(i).map_or(0.0, |e| e[1]);
                    [p[1] - e, p[1] + e, p[1]]
                })
            })
            .chain(self.bars.iter().flat_map(|b| [0.0, b.2]));
        let (mut xa, mut ya) = (Axis::new(xs, self.x_scale), Axis::new(ys, self.y_scale));
        if self.identity_line {
            let lo = xa.lo.min(ya.lo);
            let hi = xa.hi.max(ya.hi);
            xa = Axis { lo, hi, scale: self.x_scale };
            ya = Axis { lo, hi, scale: self.y_scale };
        }
        let (pw, ph) = (W - MARGIN[0] - MARGIN[1], H - MARGIN[2] - MARGIN[3]);
        let px = |v: f64| MARGIN[0] + xa.t(v) * pw;
        let py = |v: f64| MARGIN[2] + (1.0 - ya.t(v)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
            MARGIN[0], MARGIN[2]
        );
        for (v, label) in xa.ticks() {
            let x = px(v);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, MARGIN[2] + ph, MARGIN[2] + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, MARGIN[2] + ph + 18.0);
        }
        for (v, label) in ya.ticks() {
            let y = py(v);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, MARGIN[0] - 5.0, MARGIN[0]);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, MARGIN[0] - 8.0, y + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN[0] + pw / 2.0, H - 15.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            MARGIN[2] + ph / 2.0,
            MARGIN[2] + ph / 2.0,
            escape(&self.y_label)
        );
        for (x0, x1, h, color) in &self.bars {
            let (a, b) = (px(*x0), px(*x1));
            let (top, base) = (py(*h), py(ya_floor(&ya)));
            let _ = writeln!(
                s,
                r#"<rect x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.5"/>"#,
                (b - a).max(0.5),
                (base - top).max(0.0)
            );
        }
        if self.identity_line {
            let (lo, hi) = match self.x_scale {
                Scale::Linear => (xa.lo, xa.hi),
                Scale::Log => (10f64.powf(xa.lo), 10f64.powf(xa.hi)),
            };
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"/>"#,
                px(lo),
                py(lo),
                px(hi),
                py(hi),
                PALETTE[0]
            );
        }
        for (k, ser) in self.series.iter().enumerate() {
            if ser.line && ser.points.len() > 1 {
                let pts: Vec<String> = ser.points.iter().map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1]))).collect();
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, pts.join(" "), ser.color);
            }
            for (i, p) in ser.points.iter().enumerate() {
                if let Some(e) = ser.errors.get(i) {
                    if e[0] > 0.0 {
                        let _ = writeln!(
                            s,
                            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}"/>"#,
                            px(p[0] - e[0]),
                            py(p[1]),
                            px(p[0] + e[0]),
                            py(p[1]),
                            ser.color
                        );
                    }
                    if e[1] > 0.0 {
                        let _ = writeln!(
                            s,
                            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}"/>"#,
                            px(p[0]),
                            py(p[1] - e[1]),
                            px(p[0]),
                            py(p[1] + e[1]),
                            ser.color
                        );
                    }
                }
                if ser.markers {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#, px(p[0]), py(p[1]), ser.color);
                }
            }
            let ly = MARGIN[2] + 16.0 + 16.0 * k as f64;
            let lx = MARGIN[0] + 10.0;
            let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{}"/>"#, ly - 9.0, ser.color);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 15.0, escape(&ser.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn ya_floor(a: &Axis) -> f64 {
    match a.scale {
        Scale::Linear => a.lo.max(0.0),
        Scale::Log => 10f64.powf(a.lo),
    }
}

/// Bin counts of `values` over `bins` equal bins between min and max.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, f64)> {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0.0; bins];
    for x in v {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1.0;
    }
    counts.into_iter().enumerate().map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let mut c = Chart::new("t <1>", "x", "y");
        c.series.push(Series::scatter("a", PALETTE[0], vec![[1.0, 2.0], [2.0, 3.0]]).with_errors(vec![[0.1, 0.2]; 2]));
        c.series.push(Series::line("b", PALETTE[1], vec![[1.0, 1.0], [2.0, 4.0]]));
        c.identity_line = true;
        let s = c.render();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("t &lt;1&gt;"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn histogram_counts_every_value() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0, 2.0], 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<f64>(), 5.0);
        assert_eq!(h[3].2, 1.0);
    }

    #[test]
    fn log_axis_ticks_are_positive() {
        let a = Axis::new([1e5, 1e7].into_iter(), Scale::Log);
        assert!(a.ticks().iter().all(|(v, _)| *v > 0.0));
    }
}
