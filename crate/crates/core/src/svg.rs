//! Self-contained SVG figures. Output depends only on the data.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_scan::{ButterflySlice, PhaseDiagram, PhasePoint};
use crate::spectrum::ModeClass;
use crate::steady_state::RPoint;

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 90.0;
const MT: f64 = 40.0;
const MB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureKind {
    ButterflyScatter,
    PhaseHeatmap,
    LatticeHeatmap,
    RCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl FigureSpec {
    pub fn new(kind: FigureKind, title: &str, x_label: &str, y_label: &str) -> Self {
        FigureSpec { kind, title: title.into(), x_label: x_label.into(), y_label: y_label.into() }
    }
}

pub fn class_color(c: ModeClass) -> &'static str {
    match c {
        ModeClass::Bulk => "#d62728",
        ModeClass::Edge => "#1f77b4",
        ModeClass::Corner => "#2ca02c",
    }
}

/// White to dark blue ramp over `t` in [0, 1].
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |r: (f64, f64)| if r.1 > r.0 { r } else { (r.0 - 0.5, r.0 + 0.5) };
        Frame { x: widen(x), y: widen(y), body: String::new() }
    }

    fn sx(&self, x: f64) -> f64 {
        ML + (x - self.x.0) / (self.x.1 - self.x.0) * (W - ML - MR)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MB - (y - self.y.0) / (self.y.1 - self.y.0) * (H - MT - MB)
    }

    fn finish(mut self, spec: &FigureSpec, x_ticks: &[(f64, String)], y_ticks: &[(f64, String)]) -> String {
        let (l, r, t, b) = (ML, W - MR, MT, H - MB);
        let _ = writeln!(self.body, r##"<rect x="{l}" y="{t}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##, r - l, b - t);
        for (v, s) in x_ticks {
            let px = self.sx(*v);
            let _ = writeln!(self.body, r##"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{:.2}" stroke="#000"/>"##, b + 5.0);
            let _ = writeln!(self.body, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, b + 20.0, esc(s));
        }
        for (v, s) in y_ticks {
            let py = self.sy(*v);
            let _ = writeln!(self.body, r##"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="#000"/>"##, l - 5.0);
            let _ = writeln!(self.body, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, py + 4.0, esc(s));
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r##"<rect width="{W}" height="{H}" fill="#fff"/>"##);
        let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&spec.title));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 15.0, esc(&spec.x_label));
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            esc(&spec.y_label)
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn linear_ticks(lo: f64, hi: f64, n: usize) -> Vec<(f64, String)> {
    (0..=n).map(|k| {
        let v = lo + (hi - lo) * k as f64 / n as f64;
        (v, format!("{v:.2}"))
    })
    .collect()
}

fn phi_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let labels = ["0", "π/2", "π", "3π/2", "2π"];
    (0..5)
        .map(|k| (k as f64 * PI / 2.0, labels[k].to_string()))
        .filter(|(v, _)| *v >= lo - 1e-9 && *v <= hi + 1e-9)
        .collect()
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn check_kind(spec: &FigureSpec, kind: FigureKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::Invalid(format!("figure kind {:?} does not match data {:?}", spec.kind, kind)));
    }
    Ok(())
}

fn legend(f: &mut Frame, entries: &[(&str, &str)]) {
    for (k, (label, color)) in entries.iter().enumerate() {
        let y = MT + 10.0 + 18.0 * k as f64;
        let x = W - MR + 12.0;
        let _ = writeln!(f.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}"/>"#);
        let _ = writeln!(f.body, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, x + 8.0, y + 4.0);
    }
}

/// Energy against φ, one dot per mode, coloured by class.
pub fn butterfly_svg(spec: &FigureSpec, slices: &[ButterflySlice]) -> Result<String> {
    check_kind(spec, FigureKind::ButterflyScatter)?;
    if slices.iter().all(|s| s.energies.is_empty()) {
        return Err(Error::Invalid("empty butterfly dataset".into()));
    }
    let xr = bounds(slices.iter().map(|s| s.phi));
    let yr = bounds(slices.iter().flat_map(|s| s.energies.iter().copied()));
    let mut f = Frame::new(xr, yr);
    // Draw corner modes last so they sit on top.
    for class in [ModeClass::Bulk, ModeClass::Edge, ModeClass::Corner] {
        let _ = writeln!(f.body, r#"<g fill="{}">"#, class_color(class));
        for s in slices {
            for (e, c) in s.energies.iter().zip(&s.classes) {
                if *c == class {
                    let _ = writeln!(f.body, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, f.sx(s.phi), f.sy(*e));
                }
            }
        }
        f.body.push_str("</g>\n");
    }
    legend(&mut f, &[("bulk", class_color(ModeClass::Bulk)), ("edge", class_color(ModeClass::Edge)), ("corner", class_color(ModeClass::Corner))]);
    let xt = if xr.1 - xr.0 > 1.0 { phi_ticks(f.x.0, f.x.1) } else { linear_ticks(f.x.0, f.x.1, 4) };
    let yt = linear_ticks(f.y.0, f.y.1, 4);
    Ok(f.finish(spec, &xt, &yt))
}

fn grid_cells(f: &mut Frame, xs: &[f64], ys: &[f64], value: impl Fn(usize, usize) -> f64) {
    let (lo, hi) = bounds((0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).map(|(i, j)| value(i, j)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let half = |v: &[f64]| if v.len() > 1 { 0.5 * (v[1] - v[0]).abs() } else { 0.5 };
    let (hx, hy) = (half(xs), half(ys));
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let (x0, x1) = (f.sx(x - hx), f.sx(x + hx));
            let (y0, y1) = (f.sy(y + hy), f.sy(y - hy));
            let v = value(i, j);
            let _ = writeln!(
                f.body,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x1 - x0,
                y1 - y0,
                ramp((v - lo) / span)
            );
        }
    }
    let x = W - MR + 20.0;
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let y = H - MB - t * (H - MT - MB);
        let _ = writeln!(f.body, r##"<rect x="{x:.2}" y="{:.2}" width="14" height="14" fill="{}" stroke="#000"/>"##, y - 7.0, ramp(t));
        let _ = writeln!(f.body, r#"<text x="{:.2}" y="{:.2}">{:.3}</text>"#, x + 18.0, y + 4.0, lo + t * span);
    }
}

/// Heatmap of one scalar per grid point, axis1 horizontal.
pub fn phase_heatmap_svg(spec: &FigureSpec, d: &PhaseDiagram, value: impl Fn(&PhasePoint) -> f64) -> Result<String> {
    check_kind(spec, FigureKind::PhaseHeatmap)?;
    if d.points.is_empty() {
        return Err(Error::Invalid("empty phase diagram".into()));
    }
    let xs = d.grid.axis1.values();
    let ys = d.grid.axis2.values();
    let pad = |v: &[f64]| {
        let h = if v.len() > 1 { 0.5 * (v[1] - v[0]) } else { 0.5 };
        (v[0] - h, v[v.len() - 1] + h)
    };
    let mut f = Frame::new(pad(&xs), pad(&ys));
    grid_cells(&mut f, &xs, &ys, |i, j| value(d.at(i, j)));
    for &(a, b) in &d.critical_lines {
        let _ = writeln!(f.body, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#d62728"/>"##, f.sx(a), f.sy(b));
    }
    let xt = linear_ticks(xs[0], xs[xs.len() - 1], 4);
    let yt = if d.grid.axis2.name == "phi" && ys[ys.len() - 1] > 1.0 { phi_ticks(f.y.0, f.y.1) } else { linear_ticks(ys[0], ys[ys.len() - 1], 4) };
    Ok(f.finish(spec, &xt, &yt))
}

/// Square-cell heatmap of `grid[y][x]`, y increasing upward.
pub fn lattice_heatmap_svg(spec: &FigureSpec, grid: &[Vec<f64>]) -> Result<String> {
    check_kind(spec, FigureKind::LatticeHeatmap)?;
    let h = grid.len();
    let w = grid.first().map_or(0, Vec::len);
    if h == 0 || w == 0 || grid.iter().any(|r| r.len() != w) {
        return Err(Error::Invalid("empty or ragged lattice grid".into()));
    }
    let xs: Vec<f64> = (0..w).map(|x| x as f64).collect();
    let ys: Vec<f64> = (0..h).map(|y| y as f64).collect();
    let mut f = Frame::new((-0.5, w as f64 - 0.5), (-0.5, h as f64 - 0.5));
    grid_cells(&mut f, &xs, &ys, |i, j| grid[j][i]);
    let ticks = |n: usize| (0..n).step_by(if n > 8 { 3 } else { 1 }).map(|k| (k as f64, k.to_string())).collect::<Vec<_>>();
    Ok(f.finish(spec, &ticks(w), &ticks(h)))
}

/// R(φ) for one corner, with the threshold line and markers at π/2 and 3π/2.
pub fn r_curve_svg(spec: &FigureSpec, points: &[RPoint], corner: usize, threshold: f64) -> Result<String> {
    check_kind(spec, FigureKind::RCurve)?;
    if points.is_empty() {
        return Err(Error::Invalid("empty R curve".into()));
    }
    let mut f = Frame::new((0.0, 2.0 * PI), (0.0, 1.0));
    let pts: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", f.sx(p.phi), f.sy(p.r[corner]))).collect();
    let _ = writeln!(f.body, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##, pts.join(" "));
    let (l, r) = (f.sx(0.0), f.sx(2.0 * PI));
    let ty = f.sy(threshold);
    let _ = writeln!(
        f.body,
        r##"<line class="threshold" x1="{l:.2}" y1="{ty:.2}" x2="{r:.2}" y2="{ty:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##
    );
    for m in [PI / 2.0, 1.5 * PI] {
        let x = f.sx(m);
        let _ = writeln!(
            f.body,
            r##"<line class="marker" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#7f7f7f" stroke-dasharray="2 3"/>"##,
            f.sy(0.0),
            f.sy(1.0)
        );
    }
    let xt = phi_ticks(0.0, 2.0 * PI);
    let yt = linear_ticks(0.0, 1.0, 5);
    Ok(f.finish(spec, &xt, &yt))
}
