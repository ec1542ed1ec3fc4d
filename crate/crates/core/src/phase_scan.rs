//! Parameter sweeps: Hofstadter butterflies, (γ, φ) phase maps, critical γ and
//! the (λ1, λ4) anisotropy map.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{hamiltonian, CouplingSpec, LatticeSpec};
use crate::spectrum::{
    classify_modes, count_zecm, diagonalize, eigenvalues, zero_gap, ClassifierThresholds, ModeCatalog, ModeClass,
};

/// Evenly spaced samples; `include_max = false` gives the half-open `[min, max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub include_max: bool,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, steps: usize) -> Self {
        Axis { name: name.to_string(), min, max, steps, include_max: true }
    }

    pub fn half_open(name: &str, min: f64, max: f64, steps: usize) -> Self {
        Axis { include_max: false, ..Axis::new(name, min, max, steps) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Invalid(format!("axis '{}' needs at least 2 steps", self.name)));
        }
        if !(self.min < self.max) {
            return Err(Error::Invalid(format!("axis '{}' needs min < max", self.name)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let div = if self.include_max { self.steps - 1 } else { self.steps } as f64;
        (0..self.steps).map(|k| self.min + (self.max - self.min) * k as f64 / div).collect()
    }
}

/// Set a named coupling parameter: `gamma`, `phi`, `lambda1` … `lambda4`.
pub fn set_param(c: &mut CouplingSpec, name: &str, value: f64) -> Result<()> {
    match name {
        "gamma" => c.gamma = value,
        "phi" => c.phi = value,
        "lambda1" => c.lambda[0] = value,
        "lambda2" => c.lambda[1] = value,
        "lambda3" => c.lambda[2] = value,
        "lambda4" => c.lambda[3] = value,
        other => return Err(Error::Invalid(format!("unknown scan parameter '{other}'"))),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: CouplingSpec,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        let mut probe = self.fixed;
        set_param(&mut probe, &self.axis1.name, 0.0)?;
        set_param(&mut probe, &self.axis2.name, 0.0)?;
        if self.axis1.name == self.axis2.name {
            return Err(Error::Invalid("grid axes must differ".into()));
        }
        Ok(())
    }

    pub fn coupling_at(&self, v1: f64, v2: f64) -> Result<CouplingSpec> {
        let mut c = self.fixed;
        set_param(&mut c, &self.axis1.name, v1)?;
        set_param(&mut c, &self.axis2.name, v2)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p1: f64,
    pub p2: f64,
    pub zecm_count: usize,
    pub zero_gap: f64,
    /// Width of the positive-energy edge band (0 if there is none).
    pub edge_bandwidth: f64,
    pub corner_hosts: [usize; 4],
}

impl PhasePoint {
    pub fn nontrivial(&self) -> bool {
        self.zecm_count >= 2
    }
}

fn edge_bandwidth(cat: &ModeCatalog) -> f64 {
    let e: Vec<f64> = cat.modes.iter().filter(|m| m.class == ModeClass::Edge && m.energy > 0.0).map(|m| m.energy).collect();
    if e.is_empty() {
        return 0.0;
    }
    e.iter().cloned().fold(f64::MIN, f64::max) - e.iter().cloned().fold(f64::MAX, f64::min)
}

/// Full analysis of one parameter point.
pub fn analyze_point(spec: &LatticeSpec, coupling: &CouplingSpec, th: &ClassifierThresholds) -> Result<(PhasePoint, ModeCatalog)> {
    let h = hamiltonian(spec, coupling)?;
    let es = diagonalize(&h)?;
    let cat = classify_modes(&es, spec, th)?;
    let point = PhasePoint {
        p1: f64::NAN,
        p2: f64::NAN,
        zecm_count: count_zecm(&cat),
        zero_gap: zero_gap(&es.values)?,
        edge_bandwidth: edge_bandwidth(&cat),
        corner_hosts: cat.corner_hosts,
    };
    Ok((point, cat))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButterflySlice {
    pub phi: f64,
    pub energies: Vec<f64>,
    pub classes: Vec<ModeClass>,
}

pub fn butterfly(
    gamma: f64,
    phis: &[f64],
    spec: &LatticeSpec,
    template: &CouplingSpec,
    th: &ClassifierThresholds,
) -> Result<Vec<ButterflySlice>> {
    phis.par_iter()
        .map(|&phi| {
            let c = template.with_gamma(gamma).with_phi(phi);
            let (_, cat) = analyze_point(spec, &c, th)?;
            Ok(ButterflySlice {
                phi,
                energies: cat.modes.iter().map(|m| m.energy).collect(),
                classes: cat.modes.iter().map(|m| m.class).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub grid: GridSpec,
    /// Row-major: axis1 outer, axis2 inner.
    pub points: Vec<PhasePoint>,
    /// Points (axis1, axis2) where the trivial/non-trivial label flips along axis1.
    pub critical_lines: Vec<(f64, f64)>,
}

impl PhaseDiagram {
    pub fn at(&self, i1: usize, i2: usize) -> &PhasePoint {
        &self.points[i1 * self.grid.axis2.steps + i2]
    }
}

fn scan_grid(grid: &GridSpec, spec: &LatticeSpec, th: &ClassifierThresholds) -> Result<PhaseDiagram> {
    grid.validate()?;
    let v1 = grid.axis1.values();
    let v2 = grid.axis2.values();
    let jobs: Vec<(f64, f64)> = v1.iter().flat_map(|&a| v2.iter().map(move |&b| (a, b))).collect();
    let points: Vec<PhasePoint> = jobs
        .par_iter()
        .map(|&(a, b)| {
            let (mut p, _) = analyze_point(spec, &grid.coupling_at(a, b)?, th)?;
            p.p1 = a;
            p.p2 = b;
            Ok(p)
        })
        .collect::<Result<_>>()?;
    let n2 = v2.len();
    let mut critical_lines = Vec::new();
    for j in 0..n2 {
        for i in 1..v1.len() {
            if points[(i - 1) * n2 + j].nontrivial() != points[i * n2 + j].nontrivial() {
                critical_lines.push((0.5 * (v1[i - 1] + v1[i]), v2[j]));
            }
        }
    }
    Ok(PhaseDiagram { grid: grid.clone(), points, critical_lines })
}

/// ZECM-labelled (γ, φ) diagram.
pub fn hoti_phase_map(grid: &GridSpec, spec: &LatticeSpec, th: &ClassifierThresholds) -> Result<PhaseDiagram> {
    if grid.axis1.name != "gamma" || grid.axis2.name != "phi" {
        return Err(Error::Invalid("phase map axes must be (gamma, phi)".into()));
    }
    scan_grid(grid, spec, th)
}

/// Fixed couplings of the anisotropy study: φ = π, γ = 1, λ2 = λ3 = 3.
pub fn anisotropy_fixed() -> CouplingSpec {
    CouplingSpec { gamma: 1.0, lambda: [3.0, 3.0, 3.0, 3.0], phi: PI, ..Default::default() }
}

/// ZECM count and host corners over (λ1, λ4).
pub fn anisotropy_map(grid: &GridSpec, spec: &LatticeSpec, th: &ClassifierThresholds) -> Result<PhaseDiagram> {
    if grid.axis1.name != "lambda1" || grid.axis2.name != "lambda4" {
        return Err(Error::Invalid("anisotropy map axes must be (lambda1, lambda4)".into()));
    }
    scan_grid(grid, spec, th)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    /// zero_gap < gap_tol at some φ of the window.
    FirstClosing,
    /// zero_gap < gap_tol at every φ of the window.
    CompleteClosing,
    /// No corner modes at any φ of the window.
    ZecmLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    pub gap_tol: f64,
    pub phi_points: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub coarse_step: f64,
    pub resolution: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions { gap_tol: 0.02, phi_points: 33, gamma_min: 0.0, gamma_max: 1.2, coarse_step: 0.05, resolution: 0.01 }
    }
}

/// Interior sample points of an open φ window.
pub fn window_grid(window: (f64, f64), n: usize) -> Vec<f64> {
    (1..=n).map(|k| window.0 + (window.1 - window.0) * k as f64 / (n + 1) as f64).collect()
}

pub fn indicator_holds(
    gamma: f64,
    window: (f64, f64),
    indicator: Indicator,
    spec: &LatticeSpec,
    template: &CouplingSpec,
    th: &ClassifierThresholds,
    opts: &CriticalOptions,
) -> Result<bool> {
    let phis = window_grid(window, opts.phi_points);
    let flags: Vec<bool> = phis
        .par_iter()
        .map(|&phi| {
            let c = template.with_gamma(gamma).with_phi(phi);
            match indicator {
                Indicator::FirstClosing | Indicator::CompleteClosing => {
                    let e = eigenvalues(&hamiltonian(spec, &c)?)?;
                    Ok(zero_gap(&e)? < opts.gap_tol)
                }
                Indicator::ZecmLoss => Ok(analyze_point(spec, &c, th)?.0.zecm_count == 0),
            }
        })
        .collect::<Result<_>>()?;
    Ok(match indicator {
        Indicator::FirstClosing => flags.iter().any(|&f| f),
        Indicator::CompleteClosing | Indicator::ZecmLoss => flags.iter().all(|&f| f),
    })
}

/// Smallest γ at which the indicator switches on inside the window: a coarse
/// sweep brackets the switch, bisection refines it. Empty if it never switches
/// within `[gamma_min, gamma_max]` or already holds at `gamma_min`.
pub fn critical_gamma(
    window: (f64, f64),
    indicator: Indicator,
    spec: &LatticeSpec,
    template: &CouplingSpec,
    th: &ClassifierThresholds,
    opts: &CriticalOptions,
) -> Result<Vec<f64>> {
    if !(opts.resolution > 0.0 && opts.resolution <= 0.02) {
        return Err(Error::Invalid(format!("resolution must be in (0, 0.02], got {}", opts.resolution)));
    }
    if !(opts.coarse_step > 0.0) || opts.phi_points == 0 || !(window.0 < window.1) {
        return Err(Error::Invalid("bad critical-gamma options".into()));
    }
    let holds = |g: f64| indicator_holds(g, window, indicator, spec, template, th, opts);
    let mut lo = opts.gamma_min;
    if holds(lo)? {
        return Ok(vec![]);
    }
    let mut hi = None;
    let mut g = lo;
    while g < opts.gamma_max - 1e-12 {
        let next = (g + opts.coarse_step).min(opts.gamma_max);
        if holds(next)? {
            lo = g;
            hi = Some(next);
            break;
        }
        g = next;
    }
    let Some(mut hi) = hi else { return Ok(vec![]) };
    while hi - lo > opts.resolution {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(vec![0.5 * (lo + hi)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub label: String,
    pub window: (f64, f64),
    pub indicator: Indicator,
    pub gamma: Option<f64>,
}

/// Lower φ window. It starts above 0 because the plaquette band reaches E = 0 at
/// φ = 0 for every γ, which would read as a closed gap at any nearby grid point.
pub const LOWER_WINDOW: (f64, f64) = (PI / 32.0, PI / 2.0);
pub const UPPER_WINDOW: (f64, f64) = (PI / 2.0, PI);

/// The four transition points of the isotropic lattice: first and complete gap
/// closing below π/2, first gap closing and ZECM loss above π/2.
pub fn critical_gammas(
    spec: &LatticeSpec,
    template: &CouplingSpec,
    th: &ClassifierThresholds,
    opts: &CriticalOptions,
) -> Result<Vec<CriticalPoint>> {
    let plan = [
        ("gamma_c1", LOWER_WINDOW, Indicator::FirstClosing),
        ("gamma_c2", LOWER_WINDOW, Indicator::CompleteClosing),
        ("gamma_c3", UPPER_WINDOW, Indicator::FirstClosing),
        ("gamma_c4", UPPER_WINDOW, Indicator::ZecmLoss),
    ];
    plan.iter()
        .map(|&(label, window, indicator)| {
            let g = critical_gamma(window, indicator, spec, template, th, opts)?;
            Ok(CriticalPoint { label: label.to_string(), window, indicator, gamma: g.first().copied() })
        })
        .collect()
}
