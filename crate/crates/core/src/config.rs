//! Flat TOML run configuration.
//!
//! Every key is optional. Numeric keys accept a number or an expression string
//! such as `"2pi/3"`, `"-pi/2"` or `"3*pi/4"`. Ranges are written
//! `"min:max:steps"`, with a trailing `:half` for the half-open `[min, max)`.
//!
//! | key | default |
//! |-----|---------|
//! | `nx`, `ny` | 8, 8 |
//! | `boundary` | `"open"` |
//! | `gamma` | 0.5 |
//! | `lambda` | `[1, 1, 1, 1]` |
//! | `phi` | 0 |
//! | `flux_pattern` | `"uniform"` |
//! | `eps_zero`, `w_corner`, `w_edge` | 0.05, 0.5, 0.6 |
//! | `corner_patch`, `boundary_ring` | 3, 2 |
//! | `kappa`, `detuning` | 0.03, 0 |
//! | `pump` | `"corners"` (or one corner, e.g. `"bottom_left"`) |
//! | `neighborhood` | `"nearest6"` |
//! | `r_threshold`, `gap_tol` | 0.7, 0.02 |
//! | `gamma_range` | `"0:1.2:61"` |
//! | `phi_range` | `"0:2pi:128:half"` |
//! | `lambda1_range`, `lambda4_range` | `"0:4:21"` |
//! | `omega0_ghz`, `delta_ghz` | 8, 0.7 |
//! | `scale_mhz`, `guard_mhz` | 10, 50 |
//! | `out_dir` | `"out"` |

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lattice::{Corner, CouplingSpec, FluxPattern, LatticeSpec};
use crate::phase_scan::Axis;
use crate::spectrum::ClassifierThresholds;
use crate::steady_state::{NeighborhoodStrategy, PumpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpChoice {
    Corners,
    Corner(Corner),
}

impl PumpChoice {
    pub fn name(self) -> &'static str {
        match self {
            PumpChoice::Corners => "corners",
            PumpChoice::Corner(c) => c.name(),
        }
    }

    pub fn pump(self, spec: &LatticeSpec, detuning: f64) -> PumpSpec {
        match self {
            PumpChoice::Corners => PumpSpec::corners(spec),
            PumpChoice::Corner(c) => PumpSpec::single(spec.corner_site(c)),
        }
        .with_detuning(detuning)
    }
}

impl std::str::FromStr for PumpChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "corners" {
            return Ok(PumpChoice::Corners);
        }
        Corner::ALL
            .iter()
            .find(|c| c.name() == s)
            .map(|&c| PumpChoice::Corner(c))
            .ok_or_else(|| Error::Invalid(format!("unknown pump '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub coupling: CouplingSpec,
    pub classifier: ClassifierThresholds,
    pub kappa: f64,
    pub detuning: f64,
    pub pump: PumpChoice,
    pub neighborhood: NeighborhoodStrategy,
    pub r_threshold: f64,
    pub gap_tol: f64,
    pub gamma_axis: Axis,
    pub phi_axis: Axis,
    pub lambda1_axis: Axis,
    pub lambda4_axis: Axis,
    pub omega0_ghz: f64,
    pub delta_ghz: f64,
    pub scale_mhz: f64,
    pub guard_mhz: f64,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeSpec::open(8, 8),
            coupling: CouplingSpec::default(),
            classifier: ClassifierThresholds::default(),
            kappa: 0.03,
            detuning: 0.0,
            pump: PumpChoice::Corners,
            neighborhood: NeighborhoodStrategy::Nearest6,
            r_threshold: 0.7,
            gap_tol: 0.02,
            gamma_axis: Axis::new("gamma", 0.0, 1.2, 61),
            phi_axis: Axis::half_open("phi", 0.0, 2.0 * PI, 128),
            lambda1_axis: Axis::new("lambda1", 0.0, 4.0, 21),
            lambda4_axis: Axis::new("lambda4", 0.0, 4.0, 21),
            omega0_ghz: 8.0,
            delta_ghz: 0.7,
            scale_mhz: 10.0,
            guard_mhz: 50.0,
            out_dir: "out".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
    Expr(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    nx: Option<usize>,
    ny: Option<usize>,
    boundary: Option<String>,
    gamma: Option<Num>,
    lambda: Option<Vec<Num>>,
    phi: Option<Num>,
    flux_pattern: Option<String>,
    eps_zero: Option<Num>,
    w_corner: Option<Num>,
    w_edge: Option<Num>,
    corner_patch: Option<usize>,
    boundary_ring: Option<usize>,
    kappa: Option<Num>,
    detuning: Option<Num>,
    pump: Option<String>,
    neighborhood: Option<String>,
    r_threshold: Option<Num>,
    gap_tol: Option<Num>,
    gamma_range: Option<String>,
    phi_range: Option<String>,
    lambda1_range: Option<String>,
    lambda4_range: Option<String>,
    omega0_ghz: Option<Num>,
    delta_ghz: Option<Num>,
    scale_mhz: Option<Num>,
    guard_mhz: Option<Num>,
    out_dir: Option<String>,
}

/// Evaluate `+ - * /` over numbers and `pi`, with implicit multiplication (`2pi`).
pub fn eval_expr(src: &str) -> Result<f64> {
    let mut p = ExprParser { s: src.as_bytes(), i: 0 };
    let v = p.sum()?;
    p.ws();
    if p.i != p.s.len() || !v.is_finite() {
        return Err(Error::Invalid(format!("cannot evaluate '{src}'")));
    }
    Ok(v)
}

struct ExprParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl ExprParser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn err(&self) -> Error {
        Error::Invalid(format!("bad expression '{}'", String::from_utf8_lossy(self.s)))
    }

    fn sum(&mut self) -> Result<f64> {
        let mut v = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let r = self.product()?;
            v = if c == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> Result<f64> {
        let mut v = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.i += 1;
                    v *= self.unary()?;
                }
                Some(b'/') => {
                    self.i += 1;
                    v /= self.unary()?;
                }
                Some(c) if c == b'p' || c == b'(' || c == 0xCF => v *= self.atom()?,
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64> {
        let rest = &self.s[self.i.min(self.s.len())..];
        if rest.starts_with(b"pi") {
            self.i += 2;
            return Ok(PI);
        }
        if rest.starts_with("π".as_bytes()) {
            self.i += "π".len();
            return Ok(PI);
        }
        if rest.first() == Some(&b'(') {
            self.i += 1;
            let v = self.sum()?;
            if self.peek() != Some(b')') {
                return Err(self.err());
            }
            self.i += 1;
            return Ok(v);
        }
        let start = self.i;
        while self.i < self.s.len() {
            let c = self.s[self.i];
            let exp_sign = (c == b'-' || c == b'+') && self.i > start && matches!(self.s[self.i - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.i += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.s[start..self.i])
            .ok()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| self.err())
    }
}

fn num(n: &Num) -> Result<f64> {
    match n {
        Num::Int(i) => Ok(*i as f64),
        Num::Float(f) => Ok(*f),
        Num::Expr(s) => eval_expr(s),
    }
}

/// Parse `"min:max:steps"` or `"min:max:steps:half"`.
pub fn parse_axis(name: &str, text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let half = match parts.len() {
        3 => false,
        4 if parts[3] == "half" => true,
        _ => return Err(Error::Invalid(format!("range '{text}' must be min:max:steps[:half]"))),
    };
    let min = eval_expr(parts[0])?;
    let max = eval_expr(parts[1])?;
    let steps: usize = parts[2].parse().map_err(|_| Error::Invalid(format!("bad step count '{}'", parts[2])))?;
    let axis = if half { Axis::half_open(name, min, max, steps) } else { Axis::new(name, min, max, steps) };
    axis.validate()?;
    Ok(axis)
}

fn axis_text(a: &Axis) -> String {
    let mut s = format!("{:?}:{:?}:{}", a.min, a.max, a.steps);
    if !a.include_max {
        s.push_str(":half");
    }
    s
}

/// 1-based line on which `key` is assigned, if any.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: Raw = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_at(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut cfg = RunConfig::default();
    let ctx = |key: &'static str| {
        let line = line_of(text, key);
        move |e: Error| Error::Config { line, message: format!("{key}: {}", strip_kind(&e)) }
    };
    macro_rules! opt_num {
        ($opt:expr, $key:literal, $target:expr) => {
            if let Some(n) = &$opt {
                $target = num(n).map_err(ctx($key))?;
            }
        };
    }
    if let Some(v) = raw.nx {
        cfg.lattice.nx = v;
    }
    if let Some(v) = raw.ny {
        cfg.lattice.ny = v;
    }
    if let Some(s) = &raw.boundary {
        cfg.lattice.boundary = s.parse().map_err(ctx("boundary"))?;
    }
    opt_num!(raw.gamma, "gamma", cfg.coupling.gamma);
    opt_num!(raw.phi, "phi", cfg.coupling.phi);
    if let Some(l) = &raw.lambda {
        if l.len() != 4 {
            return Err(ctx("lambda")(Error::Invalid(format!("expected 4 values, got {}", l.len()))));
        }
        for (k, n) in l.iter().enumerate() {
            cfg.coupling.lambda[k] = num(n).map_err(ctx("lambda"))?;
        }
    }
    if let Some(s) = &raw.flux_pattern {
        cfg.coupling.flux_pattern = s.parse::<FluxPattern>().map_err(ctx("flux_pattern"))?;
    }
    opt_num!(raw.eps_zero, "eps_zero", cfg.classifier.eps_zero);
    opt_num!(raw.w_corner, "w_corner", cfg.classifier.w_corner);
    opt_num!(raw.w_edge, "w_edge", cfg.classifier.w_edge);
    if let Some(v) = raw.corner_patch {
        cfg.classifier.corner_patch = v;
    }
    if let Some(v) = raw.boundary_ring {
        cfg.classifier.boundary_ring = v;
    }
    opt_num!(raw.kappa, "kappa", cfg.kappa);
    opt_num!(raw.detuning, "detuning", cfg.detuning);
    if let Some(s) = &raw.pump {
        cfg.pump = s.parse().map_err(ctx("pump"))?;
    }
    if let Some(s) = &raw.neighborhood {
        cfg.neighborhood = s.parse().map_err(ctx("neighborhood"))?;
    }
    opt_num!(raw.r_threshold, "r_threshold", cfg.r_threshold);
    opt_num!(raw.gap_tol, "gap_tol", cfg.gap_tol);
    for (opt, key, name, target) in [
        (&raw.gamma_range, "gamma_range", "gamma", &mut cfg.gamma_axis),
        (&raw.phi_range, "phi_range", "phi", &mut cfg.phi_axis),
        (&raw.lambda1_range, "lambda1_range", "lambda1", &mut cfg.lambda1_axis),
        (&raw.lambda4_range, "lambda4_range", "lambda4", &mut cfg.lambda4_axis),
    ] {
        if let Some(s) = opt {
            *target = parse_axis(name, s).map_err(ctx(key))?;
        }
    }
    opt_num!(raw.omega0_ghz, "omega0_ghz", cfg.omega0_ghz);
    opt_num!(raw.delta_ghz, "delta_ghz", cfg.delta_ghz);
    opt_num!(raw.scale_mhz, "scale_mhz", cfg.scale_mhz);
    opt_num!(raw.guard_mhz, "guard_mhz", cfg.guard_mhz);
    if let Some(s) = raw.out_dir {
        cfg.out_dir = s;
    }
    cfg.validate().map_err(|e| match e {
        Error::Config { line: None, message } => {
            let key = message.split(':').next().unwrap_or("");
            Error::Config { line: line_of(text, key), message }
        }
        other => other,
    })?;
    Ok(cfg)
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Invalid(m) | Error::Domain(m) | Error::HardwareRange(m) => m.clone(),
        other => other.to_string(),
    }
}

impl RunConfig {
    /// Range checks. Errors name the offending key first (`key: reason`).
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: String| Err(Error::Config { line: None, message: format!("{key}: {why}") });
        if self.lattice.nx == 0 {
            return bad("nx", "must be >= 1".into());
        }
        if self.lattice.ny == 0 {
            return bad("ny", "must be >= 1".into());
        }
        if let Err(e) = self.coupling.validate() {
            let key = if !self.coupling.gamma.is_finite() || self.coupling.gamma < 0.0 {
                "gamma"
            } else if !self.coupling.phi.is_finite() {
                "phi"
            } else {
                "lambda"
            };
            return bad(key, strip_kind(&e));
        }
        if let Err(e) = self.classifier.validate() {
            return bad("eps_zero", strip_kind(&e));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad("kappa", format!("must be > 0, got {}", self.kappa));
        }
        if !self.detuning.is_finite() {
            return bad("detuning", "must be finite".into());
        }
        if !(self.r_threshold > 0.0 && self.r_threshold <= 1.0) {
            return bad("r_threshold", "must lie in (0, 1]".into());
        }
        if !(self.gap_tol > 0.0 && self.gap_tol.is_finite()) {
            return bad("gap_tol", "must be > 0".into());
        }
        for (key, a) in [
            ("gamma_range", &self.gamma_axis),
            ("phi_range", &self.phi_axis),
            ("lambda1_range", &self.lambda1_axis),
            ("lambda4_range", &self.lambda4_axis),
        ] {
            if let Err(e) = a.validate() {
                return bad(key, strip_kind(&e));
            }
        }
        if self.gamma_axis.min < 0.0 {
            return bad("gamma_range", "must be non-negative".into());
        }
        if self.lambda1_axis.min < 0.0 || self.lambda4_axis.min < 0.0 {
            return bad("lambda1_range", "must be non-negative".into());
        }
        if !(6.0..=10.0).contains(&self.omega0_ghz) {
            return bad("omega0_ghz", "must lie in [6, 10] GHz".into());
        }
        if !(0.5..=1.0).contains(&self.delta_ghz) {
            return bad("delta_ghz", "must lie in [0.5, 1] GHz".into());
        }
        if !(self.scale_mhz > 0.0 && self.scale_mhz.is_finite()) {
            return bad("scale_mhz", "must be > 0".into());
        }
        if !(self.guard_mhz >= 0.0 && self.guard_mhz.is_finite()) {
            return bad("guard_mhz", "must be >= 0".into());
        }
        if self.out_dir.is_empty() {
            return bad("out_dir", "must not be empty".into());
        }
        Ok(())
    }

    pub fn pump_spec(&self) -> PumpSpec {
        self.pump.pump(&self.lattice, self.detuning)
    }

    /// Serialize as a config document that parses back to `self` exactly.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let c = &self.coupling;
        let th = &self.classifier;
        let _ = writeln!(s, "nx = {}\nny = {}\nboundary = \"{}\"", self.lattice.nx, self.lattice.ny, self.lattice.boundary);
        let _ = writeln!(s, "gamma = {:?}", c.gamma);
        let _ = writeln!(s, "lambda = [{:?}, {:?}, {:?}, {:?}]", c.lambda[0], c.lambda[1], c.lambda[2], c.lambda[3]);
        let _ = writeln!(s, "phi = {:?}\nflux_pattern = \"{}\"", c.phi, c.flux_pattern);
        let _ = writeln!(s, "eps_zero = {:?}\nw_corner = {:?}\nw_edge = {:?}", th.eps_zero, th.w_corner, th.w_edge);
        let _ = writeln!(s, "corner_patch = {}\nboundary_ring = {}", th.corner_patch, th.boundary_ring);
        let _ = writeln!(s, "kappa = {:?}\ndetuning = {:?}", self.kappa, self.detuning);
        let _ = writeln!(s, "pump = \"{}\"\nneighborhood = \"{}\"", self.pump.name(), self.neighborhood.name());
        let _ = writeln!(s, "r_threshold = {:?}\ngap_tol = {:?}", self.r_threshold, self.gap_tol);
        let _ = writeln!(s, "gamma_range = \"{}\"", axis_text(&self.gamma_axis));
        let _ = writeln!(s, "phi_range = \"{}\"", axis_text(&self.phi_axis));
        let _ = writeln!(s, "lambda1_range = \"{}\"", axis_text(&self.lambda1_axis));
        let _ = writeln!(s, "lambda4_range = \"{}\"", axis_text(&self.lambda4_axis));
        let _ = writeln!(s, "omega0_ghz = {:?}\ndelta_ghz = {:?}", self.omega0_ghz, self.delta_ghz);
        let _ = writeln!(s, "scale_mhz = {:?}\nguard_mhz = {:?}", self.scale_mhz, self.guard_mhz);
        let _ = writeln!(s, "out_dir = {}", toml::Value::String(self.out_dir.clone()));
        s
    }
}
