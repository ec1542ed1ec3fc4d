//! Lattice geometry, hopping pattern, Peierls phases and Hamiltonian assembly.
//!
//! Physical coordinates: site `(cx, cy, s)` sits at `(2(cx-1)+ox, 2(cy-1)+oy)` with
//! offsets A=(0,0), B=(0,1), C=(1,0), D=(1,1). A bond along x from column `X`
//! is intra-cell when `X` is even, a bond along y from row `Y` when `Y` is even.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
    C,
    D,
}

impl Sublattice {
    pub const ALL: [Sublattice; 4] = [Sublattice::A, Sublattice::B, Sublattice::C, Sublattice::D];

    pub fn offset(self) -> (usize, usize) {
        match self {
            Sublattice::A => (0, 0),
            Sublattice::B => (0, 1),
            Sublattice::C => (1, 0),
            Sublattice::D => (1, 1),
        }
    }

    pub fn from_offset(ox: usize, oy: usize) -> Sublattice {
        match (ox & 1, oy & 1) {
            (0, 0) => Sublattice::A,
            (0, 1) => Sublattice::B,
            (1, 0) => Sublattice::C,
            _ => Sublattice::D,
        }
    }

    fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Sublattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Sublattice::A => "A",
            Sublattice::B => "B",
            Sublattice::C => "C",
            Sublattice::D => "D",
        };
        f.write_str(c)
    }
}

impl std::str::FromStr for Sublattice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Sublattice::A),
            "B" | "b" => Ok(Sublattice::B),
            "C" | "c" => Ok(Sublattice::C),
            "D" | "d" => Ok(Sublattice::D),
            other => Err(Error::Invalid(format!("unknown sublattice '{other}'"))),
        }
    }
}

/// One resonator: unit cell (1-based) plus sublattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteId {
    pub cell_x: usize,
    pub cell_y: usize,
    pub sublattice: Sublattice,
}

impl SiteId {
    pub fn new(cell_x: usize, cell_y: usize, sublattice: Sublattice) -> Self {
        SiteId { cell_x, cell_y, sublattice }
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.sublattice, self.cell_x, self.cell_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Invalid(format!("unknown boundary '{other}'"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Corners in pump order: A(1,1), B(1,Ny), C(Nx,1), D(Nx,Ny).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    BottomLeft,
    TopLeft,
    BottomRight,
    TopRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::BottomLeft, Corner::TopLeft, Corner::BottomRight, Corner::TopRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Corner::BottomLeft => "bottom_left",
            Corner::TopLeft => "top_left",
            Corner::BottomRight => "bottom_right",
            Corner::TopRight => "top_right",
        }
    }

    /// Step direction pointing into the lattice from this corner.
    pub fn inward(self) -> (isize, isize) {
        match self {
            Corner::BottomLeft => (1, 1),
            Corner::TopLeft => (1, -1),
            Corner::BottomRight => (-1, 1),
            Corner::TopRight => (-1, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn open(nx: usize, ny: usize) -> Self {
        LatticeSpec { nx, ny, boundary: Boundary::Open }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Invalid(format!("lattice must have at least one cell, got {}x{}", self.nx, self.ny)));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        4 * self.nx * self.ny
    }

    /// Number of site columns.
    pub fn width(&self) -> usize {
        2 * self.nx
    }

    /// Number of site rows.
    pub fn height(&self) -> usize {
        2 * self.ny
    }

    pub fn contains(&self, site: SiteId) -> bool {
        (1..=self.nx).contains(&site.cell_x) && (1..=self.ny).contains(&site.cell_y)
    }

    /// Row-major over cells, then A, B, C, D.
    pub fn site_index(&self, site: SiteId) -> Result<usize> {
        if !self.contains(site) {
            return Err(Error::Bounds(format!("{site} outside {}x{} lattice", self.nx, self.ny)));
        }
        Ok(((site.cell_y - 1) * self.nx + (site.cell_x - 1)) * 4 + site.sublattice.rank())
    }

    pub fn site(&self, index: usize) -> Result<SiteId> {
        if index >= self.num_sites() {
            return Err(Error::Bounds(format!("index {index} >= {}", self.num_sites())));
        }
        let cell = index / 4;
        Ok(SiteId::new(cell % self.nx + 1, cell / self.nx + 1, Sublattice::ALL[index % 4]))
    }

    pub fn coords(&self, site: SiteId) -> (usize, usize) {
        let (ox, oy) = site.sublattice.offset();
        (2 * (site.cell_x - 1) + ox, 2 * (site.cell_y - 1) + oy)
    }

    pub fn coords_of_index(&self, index: usize) -> (usize, usize) {
        let cell = index / 4;
        let (ox, oy) = Sublattice::ALL[index % 4].offset();
        (2 * (cell % self.nx) + ox, 2 * (cell / self.nx) + oy)
    }

    pub fn site_at(&self, x: usize, y: usize) -> Result<SiteId> {
        if x >= self.width() || y >= self.height() {
            return Err(Error::Bounds(format!("coordinate ({x},{y}) outside {}x{}", self.width(), self.height())));
        }
        Ok(SiteId::new(x / 2 + 1, y / 2 + 1, Sublattice::from_offset(x, y)))
    }

    /// Index of the site at physical coordinate `(x, y)`; caller guarantees bounds.
    pub fn index_at(&self, x: usize, y: usize) -> usize {
        ((y / 2) * self.nx + x / 2) * 4 + Sublattice::from_offset(x, y).rank()
    }

    pub fn corner_site(&self, corner: Corner) -> SiteId {
        match corner {
            Corner::BottomLeft => SiteId::new(1, 1, Sublattice::A),
            Corner::TopLeft => SiteId::new(1, self.ny, Sublattice::B),
            Corner::BottomRight => SiteId::new(self.nx, 1, Sublattice::C),
            Corner::TopRight => SiteId::new(self.nx, self.ny, Sublattice::D),
        }
    }

    pub fn corner_index(&self, corner: Corner) -> usize {
        let (x, y) = self.coords(self.corner_site(corner));
        self.index_at(x, y)
    }

    pub fn corner_of(&self, site: SiteId) -> Option<Corner> {
        Corner::ALL.into_iter().find(|&c| self.corner_site(c) == site)
    }

    /// Coordinate reached by stepping `(a, b)` inward from a corner, if inside the lattice.
    pub fn from_corner(&self, corner: Corner, a: usize, b: usize) -> Option<(usize, usize)> {
        let (cx, cy) = self.coords(self.corner_site(corner));
        let (dx, dy) = corner.inward();
        let x = cx as isize + dx * a as isize;
        let y = cy as isize + dy * b as isize;
        if x < 0 || y < 0 || x >= self.width() as isize || y >= self.height() as isize {
            return None;
        }
        Some((x as usize, y as usize))
    }

    /// Sublattice parity (x + y) mod 2.
    pub fn parity(&self, index: usize) -> usize {
        let (x, y) = self.coords_of_index(index);
        (x + y) % 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxPattern {
    Uniform,
    IntracellOnly,
}

impl std::str::FromStr for FluxPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(FluxPattern::Uniform),
            "intracell-only" => Ok(FluxPattern::IntracellOnly),
            other => Err(Error::Invalid(format!("unknown flux pattern '{other}'"))),
        }
    }
}

impl fmt::Display for FluxPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxPattern::Uniform => "uniform",
            FluxPattern::IntracellOnly => "intracell-only",
        })
    }
}

/// Hopping strengths (units of the reference inter-cell hop) and flux per plaquette.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub gamma: f64,
    pub lambda: [f64; 4],
    pub phi: f64,
    pub flux_pattern: FluxPattern,
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec { gamma: 0.5, lambda: [1.0; 4], phi: 0.0, flux_pattern: FluxPattern::Uniform }
    }
}

impl CouplingSpec {
    pub fn isotropic(gamma: f64, phi: f64) -> Self {
        CouplingSpec { gamma, phi, ..Default::default() }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.gamma.is_finite() && self.phi.is_finite() && self.lambda.iter().all(|l| l.is_finite());
        if !finite {
            return Err(Error::Invalid("coupling values must be finite".into()));
        }
        if self.gamma < 0.0 || self.lambda.iter().any(|&l| l < 0.0) {
            return Err(Error::Invalid("hopping strengths must be non-negative".into()));
        }
        Ok(())
    }

    pub fn amplitude(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Intra => self.gamma,
            LinkClass::Lambda1 => self.lambda[0],
            LinkClass::Lambda2 => self.lambda[1],
            LinkClass::Lambda3 => self.lambda[2],
            LinkClass::Lambda4 => self.lambda[3],
        }
    }
}

/// Bond classes. Inter-cell classes: λ1 horizontal on even rows (C→A, bottom of a
/// cell), λ2 vertical on even columns (B→A, left), λ3 vertical on odd columns
/// (D→C, right), λ4 horizontal on odd rows (D→B, top).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Intra,
    Lambda1,
    Lambda2,
    Lambda3,
    Lambda4,
}

impl LinkClass {
    pub fn name(self) -> &'static str {
        match self {
            LinkClass::Intra => "gamma",
            LinkClass::Lambda1 => "lambda1",
            LinkClass::Lambda2 => "lambda2",
            LinkClass::Lambda3 => "lambda3",
            LinkClass::Lambda4 => "lambda4",
        }
    }

    fn horizontal(x: usize, y: usize) -> LinkClass {
        if x.is_multiple_of(2) {
            LinkClass::Intra
        } else if y.is_multiple_of(2) {
            LinkClass::Lambda1
        } else {
            LinkClass::Lambda4
        }
    }

    fn vertical(x: usize, y: usize) -> LinkClass {
        if y.is_multiple_of(2) {
            LinkClass::Intra
        } else if x.is_multiple_of(2) {
            LinkClass::Lambda2
        } else {
            LinkClass::Lambda3
        }
    }
}

/// Directed link; `H[to, from] = amplitude * exp(i phase)` and its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingTerm {
    pub from: SiteId,
    pub to: SiteId,
    pub class: LinkClass,
    pub amplitude: f64,
    pub phase: f64,
}

fn vertical_phase(c: &CouplingSpec, x: usize, y: usize) -> f64 {
    match c.flux_pattern {
        FluxPattern::Uniform => c.phi * x as f64,
        // Only intra-cell plaquettes enclose flux: the vector potential steps by φ
        // across each cell and is flat between cells.
        FluxPattern::IntracellOnly => {
            if y.is_multiple_of(2) {
                c.phi * x.div_ceil(2) as f64
            } else {
                0.0
            }
        }
    }
}

fn wrap_phase(p: f64) -> f64 {
    let r = p.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r
    }
}

/// All nearest-neighbour links, each stored once, in Landau gauge.
pub fn enumerate_links(spec: &LatticeSpec, coupling: &CouplingSpec) -> Result<Vec<HoppingTerm>> {
    spec.validate()?;
    coupling.validate()?;
    let (w, h) = (spec.width(), spec.height());
    let periodic = spec.boundary == Boundary::Periodic;
    if periodic && coupling.flux_pattern == FluxPattern::Uniform {
        let turns = coupling.phi * w as f64 / TAU;
        if (turns - turns.round()).abs() > 1e-9 {
            return Err(Error::Commensurability { phi: coupling.phi, width: w });
        }
    }
    let site = |x: usize, y: usize| spec.site_at(x, y).expect("coordinate in range");
    let mut links = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w || periodic {
                let class = LinkClass::horizontal(x, y);
                links.push(HoppingTerm {
                    from: site(x, y),
                    to: site((x + 1) % w, y),
                    class,
                    amplitude: coupling.amplitude(class),
                    phase: 0.0,
                });
            }
            if y + 1 < h || periodic {
                let class = LinkClass::vertical(x, y);
                links.push(HoppingTerm {
                    from: site(x, y),
                    to: site(x, (y + 1) % h),
                    class,
                    amplitude: coupling.amplitude(class),
                    phase: wrap_phase(vertical_phase(coupling, x, y)),
                });
            }
        }
    }
    Ok(links)
}

/// Dense Hermitian hopping matrix together with its lattice.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    spec: LatticeSpec,
    matrix: Mat<Complex64>,
}

impl Hamiltonian {
    pub fn from_matrix(spec: LatticeSpec, matrix: Mat<Complex64>) -> Result<Self> {
        let n = spec.num_sites();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows() });
        }
        Ok(Hamiltonian { spec, matrix })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// max |H - H†|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.matrix[(i, j)].norm());
            }
        }
        m
    }

    pub fn scaled(&self, c: f64) -> Hamiltonian {
        let n = self.dim();
        Hamiltonian { spec: self.spec, matrix: Mat::from_fn(n, n, |i, j| self.matrix[(i, j)] * c) }
    }
}

pub fn build_hamiltonian(links: &[HoppingTerm], spec: &LatticeSpec) -> Result<Hamiltonian> {
    let n = spec.num_sites();
    let mut seen = HashSet::with_capacity(links.len());
    let mut m = Mat::<Complex64>::zeros(n, n);
    for l in links {
        let i = spec.site_index(l.from)?;
        let j = spec.site_index(l.to)?;
        if i == j {
            return Err(Error::Invalid(format!("self-loop at {}", l.from)));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::DuplicateLink(i.min(j), i.max(j)));
        }
        let t = Complex64::from_polar(l.amplitude, l.phase);
        m[(j, i)] = t;
        m[(i, j)] = t.conj();
    }
    Ok(Hamiltonian { spec: *spec, matrix: m })
}

/// Convenience: links plus assembly.
pub fn hamiltonian(spec: &LatticeSpec, coupling: &CouplingSpec) -> Result<Hamiltonian> {
    build_hamiltonian(&enumerate_links(spec, coupling)?, spec)
}

/// `U H U†` with `U = diag(exp(i chi))`.
pub fn gauge_transform(h: &Hamiltonian, site_phases: &[f64]) -> Result<Hamiltonian> {
    let n = h.dim();
    if site_phases.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: site_phases.len() });
    }
    let u: Vec<Complex64> = site_phases.iter().map(|&c| Complex64::from_polar(1.0, c)).collect();
    let m = Mat::from_fn(n, n, |i, j| u[i] * h.matrix[(i, j)] * u[j].conj());
    Ok(Hamiltonian { spec: h.spec, matrix: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plaquette {
    /// Lower-left physical coordinate.
    pub x: usize,
    pub y: usize,
    /// Whether all four corners belong to one unit cell.
    pub intra_cell: bool,
    /// Directed phase sum around the loop, in [0, 2π).
    pub flux: f64,
}

/// Counter-clockwise phase sum around every elementary square.
pub fn plaquette_fluxes(h: &Hamiltonian) -> Result<Vec<Plaquette>> {
    let spec = h.spec;
    let (w, hh) = (spec.width(), spec.height());
    let periodic = spec.boundary == Boundary::Periodic;
    let (px, py) = if periodic { (w, hh) } else { (w - 1, hh - 1) };
    let mut out = Vec::with_capacity(px * py);
    for y in 0..py {
        for x in 0..px {
            let (x1, y1) = ((x + 1) % w, (y + 1) % hh);
            let a = spec.index_at(x, y);
            let b = spec.index_at(x1, y);
            let c = spec.index_at(x1, y1);
            let d = spec.index_at(x, y1);
            let hops = [h.matrix[(b, a)], h.matrix[(c, b)], h.matrix[(d, c)], h.matrix[(a, d)]];
            if hops.iter().any(|t| t.norm() == 0.0) {
                return Err(Error::IncompletePlaquette(x, y));
            }
            let prod = hops.iter().fold(Complex64::new(1.0, 0.0), |acc, t| acc * t / t.norm());
            out.push(Plaquette { x, y, intra_cell: x % 2 == 0 && y % 2 == 0, flux: wrap_phase(prod.arg()) });
        }
    }
    Ok(out)
}

/// Circular distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
