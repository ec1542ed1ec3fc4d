//! Coherently driven, uniformly damped lattice: `[H − (Ω_P + iκ/2) I] x + P = 0`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{hamiltonian, Corner, CouplingSpec, Hamiltonian, LatticeSpec, SiteId};
use crate::spectrum::{EigenSystem, ModeCatalog, ModeClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub drives: Vec<(SiteId, Complex64)>,
    /// Ω_P in the rotating frame.
    pub detuning: f64,
}

impl PumpSpec {
    /// Unit drive on all four corners.
    pub fn corners(spec: &LatticeSpec) -> Self {
        let drives = Corner::ALL.iter().map(|&c| (spec.corner_site(c), Complex64::new(1.0, 0.0))).collect();
        PumpSpec { drives, detuning: 0.0 }
    }

    pub fn single(site: SiteId) -> Self {
        PumpSpec { drives: vec![(site, Complex64::new(1.0, 0.0))], detuning: 0.0 }
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        PumpSpec { drives: self.drives.iter().map(|&(s, a)| (s, a * c)).collect(), detuning: self.detuning }
    }

    pub fn vector(&self, spec: &LatticeSpec) -> Result<Vec<Complex64>> {
        if self.drives.iter().all(|(_, a)| a.norm() == 0.0) {
            return Err(Error::Invalid("pump needs at least one nonzero drive".into()));
        }
        let mut p = vec![Complex64::new(0.0, 0.0); spec.num_sites()];
        for &(s, a) in &self.drives {
            p[spec.site_index(s)?] += a;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationSpec {
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateField {
    pub amplitudes: Vec<Complex64>,
    /// |⟨a_s⟩|² per site.
    pub sspn: Vec<f64>,
    /// ‖M x + P‖₂ / ‖P‖₂.
    pub residual: f64,
}

/// One LU factorization of `M = H − (Ω_P + iκ/2) I`, reusable across pumps.
pub struct SteadySolver {
    spec: LatticeSpec,
    m: Mat<Complex64>,
    lu: PartialPivLu<Complex64>,
}

impl SteadySolver {
    pub fn new(h: &Hamiltonian, detuning: f64, diss: DissipationSpec) -> Result<Self> {
        if !(diss.kappa > 0.0 && diss.kappa.is_finite()) {
            return Err(Error::Invalid(format!("kappa must be > 0, got {}", diss.kappa)));
        }
        if !detuning.is_finite() {
            return Err(Error::Invalid("detuning must be finite".into()));
        }
        let n = h.dim();
        let shift = Complex64::new(detuning, diss.kappa / 2.0);
        let m = Mat::from_fn(n, n, |i, j| if i == j { h.get(i, j) - shift } else { h.get(i, j) });
        let lu = m.partial_piv_lu();
        Ok(SteadySolver { spec: *h.spec(), m, lu })
    }

    pub fn solve_vector(&self, p: &[Complex64]) -> Result<SteadyStateField> {
        let n = self.m.nrows();
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        let mut x = Mat::<Complex64>::from_fn(n, 1, |i, _| -p[i]);
        self.lu.solve_in_place(x.as_mut());
        let amplitudes: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
        let mx = &self.m * &x;
        let res: f64 = (0..n).map(|i| (mx[(i, 0)] + p[i]).norm_sqr()).sum::<f64>().sqrt();
        let pn: f64 = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let sspn = amplitudes.iter().map(|z| z.norm_sqr()).collect();
        Ok(SteadyStateField { amplitudes, sspn, residual: res / pn })
    }

    pub fn solve(&self, pump: &PumpSpec) -> Result<SteadyStateField> {
        self.solve_vector(&pump.vector(&self.spec)?)
    }
}

pub fn solve_steady_state(h: &Hamiltonian, pump: &PumpSpec, diss: DissipationSpec) -> Result<SteadyStateField> {
    SteadySolver::new(h, pump.detuning, diss)?.solve(pump)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborhoodStrategy {
    Nearest6,
    Manhattan2,
    Patch3x3,
}

impl NeighborhoodStrategy {
    pub const ALL: [NeighborhoodStrategy; 3] =
        [NeighborhoodStrategy::Nearest6, NeighborhoodStrategy::Manhattan2, NeighborhoodStrategy::Patch3x3];

    pub fn name(self) -> &'static str {
        match self {
            NeighborhoodStrategy::Nearest6 => "nearest6",
            NeighborhoodStrategy::Manhattan2 => "manhattan2",
            NeighborhoodStrategy::Patch3x3 => "patch3x3",
        }
    }

    /// Offsets from the corner, measured inward, corner first.
    pub fn offsets(self) -> Vec<(usize, usize)> {
        match self {
            NeighborhoodStrategy::Nearest6 => {
                let mut cand: Vec<(usize, usize)> = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).collect();
                cand.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
                cand.truncate(7);
                cand
            }
            NeighborhoodStrategy::Manhattan2 => {
                let mut v: Vec<(usize, usize)> =
                    (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).filter(|&(a, b)| a + b <= 2).collect();
                v.sort_by_key(|&(a, b)| (a + b, a, b));
                v
            }
            NeighborhoodStrategy::Patch3x3 => {
                let mut v: Vec<(usize, usize)> = (0..3)
                    .flat_map(|a| (0..3).map(move |b| (a, b)))
                    .filter(|&p| p != (2, 2) && p != (1, 2))
                    .collect();
                v.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
                v
            }
        }
    }
}

impl std::str::FromStr for NeighborhoodStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nearest6" => Ok(NeighborhoodStrategy::Nearest6),
            "manhattan2" => Ok(NeighborhoodStrategy::Manhattan2),
            "patch3x3" => Ok(NeighborhoodStrategy::Patch3x3),
            other => Err(Error::Invalid(format!("unknown neighbourhood strategy '{other}'"))),
        }
    }
}

/// Corner plus its neighbours, mirrored so every corner sees the same shape.
pub fn corner_neighborhood(corner: SiteId, spec: &LatticeSpec, strategy: NeighborhoodStrategy) -> Result<Vec<SiteId>> {
    let c = spec
        .corner_of(corner)
        .ok_or_else(|| Error::Domain(format!("{corner} is not a lattice corner")))?;
    let mut out = Vec::new();
    for (a, b) in strategy.offsets() {
        if let Some((x, y)) = spec.from_corner(c, a, b) {
            out.push(spec.site_at(x, y)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub corner: SiteId,
    pub neighborhood: Vec<SiteId>,
    pub n_corner: f64,
    pub n_patch: f64,
    pub r: f64,
}

pub fn concentration_factor(
    field: &SteadyStateField,
    corner: SiteId,
    nbhd: &[SiteId],
    spec: &LatticeSpec,
) -> Result<ConcentrationReport> {
    if !nbhd.contains(&corner) {
        return Err(Error::Domain(format!("neighbourhood does not contain {corner}")));
    }
    let n_corner = field.sspn[spec.site_index(corner)?];
    let mut n_patch = 0.0;
    for s in nbhd {
        n_patch += field.sspn[spec.site_index(*s)?];
    }
    if n_patch <= 0.0 {
        return Err(Error::UndefinedR);
    }
    Ok(ConcentrationReport { corner, neighborhood: nbhd.to_vec(), n_corner, n_patch, r: n_corner / n_patch })
}

/// R at each of the four corners, in `Corner::ALL` order.
pub fn corner_r(field: &SteadyStateField, spec: &LatticeSpec, strategy: NeighborhoodStrategy) -> Result<[f64; 4]> {
    let mut r = [0.0; 4];
    for c in Corner::ALL {
        let site = spec.corner_site(c);
        let nb = corner_neighborhood(site, spec, strategy)?;
        r[c.index()] = concentration_factor(field, site, &nb, spec)?.r;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RPoint {
    pub phi: f64,
    pub r: [f64; 4],
}

/// R(φ) under the four-corner pump at zero detuning.
pub fn r_vs_phi(
    phis: &[f64],
    template: &CouplingSpec,
    kappa: f64,
    spec: &LatticeSpec,
    strategy: NeighborhoodStrategy,
) -> Result<Vec<RPoint>> {
    let pump = PumpSpec::corners(spec);
    phis.par_iter()
        .map(|&phi| {
            let h = hamiltonian(spec, &template.with_phi(phi))?;
            let field = solve_steady_state(&h, &pump, DissipationSpec { kappa })?;
            Ok(RPoint { phi, r: corner_r(&field, spec, strategy)? })
        })
        .collect()
}

/// Photon number on the physical grid, indexed `[y][x]`.
pub fn sspn_map(field: &SteadyStateField, spec: &LatticeSpec) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; spec.width()]; spec.height()];
    for (i, n) in field.sspn.iter().enumerate() {
        let (x, y) = spec.coords_of_index(i);
        g[y][x] = *n;
    }
    g
}

/// Site indices sorted by descending photon number (ties by index).
pub fn top_sites(field: &SteadyStateField, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..field.sspn.len()).collect();
    idx.sort_by(|&a, &b| field.sspn[b].total_cmp(&field.sspn[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Positions where `ys - threshold` changes sign, linearly interpolated in `xs`.
pub fn threshold_crossings(xs: &[f64], ys: &[f64], threshold: f64) -> Vec<f64> {
    let above = |y: f64| y >= threshold;
    xs.windows(2)
        .zip(ys.windows(2))
        .filter(|(_, y)| above(y[0]) != above(y[1]))
        .map(|(x, y)| x[0] + (threshold - y[0]) / (y[1] - y[0]) * (x[1] - x[0]))
        .collect()
}

/// Intensity profiles of the corner modes, one per hosting corner. Each is the
/// projection of the corner site onto the corner-mode subspace, so degenerate
/// corner modes are resolved into their localized members.
pub fn corner_mode_profiles(es: &EigenSystem, cat: &ModeCatalog, spec: &LatticeSpec) -> Vec<Vec<f64>> {
    let block: Vec<usize> = (0..cat.modes.len()).filter(|&k| cat.modes[k].class == ModeClass::Corner).collect();
    let mut out = Vec::new();
    for c in cat.host_corners() {
        let ci = spec.corner_index(c);
        let psi: Vec<Complex64> = (0..es.vectors.nrows())
            .map(|i| block.iter().map(|&k| es.vectors[(ci, k)].conj() * es.vectors[(i, k)]).sum())
            .collect();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm > 0.0 {
            out.push(psi.iter().map(|z| z.norm_sqr() / norm).collect());
        }
    }
    out
}

/// Norm of the projection of the unit-normalized `sspn` onto the span of `profiles`.
pub fn profile_overlap(sspn: &[f64], profiles: &[Vec<f64>]) -> Result<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let n = dot(sspn, sspn).sqrt();
    if n == 0.0 {
        return Err(Error::Domain("zero photon number".into()));
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in profiles {
        if p.len() != sspn.len() {
            return Err(Error::DimensionMismatch { expected: sspn.len(), got: p.len() });
        }
        let scale = dot(p, p).sqrt();
        let mut v = p.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = dot(&v, &v).sqrt();
        if r > 1e-10 * scale {
            basis.push(v.iter().map(|x| x / r).collect());
        }
    }
    Ok(basis.iter().map(|q| (dot(sspn, q) / n).powi(2)).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Sublattice, build_hamiltonian};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn no_hopping_diagonal_solve() {
        let spec = LatticeSpec::open(2, 2);
        let h = build_hamiltonian(&[], &spec).unwrap();
        let site = SiteId::new(1, 1, Sublattice::A);
        let f = solve_steady_state(&h, &PumpSpec::single(site), DissipationSpec { kappa: 0.03 }).unwrap();
        let i = spec.site_index(site).unwrap();
        assert!((f.amplitudes[i] - c(0.0, -2.0 / 0.03)).norm() < 1e-12);
        assert!((f.sspn[i] - 4.0 / 0.0009).abs() < 1e-8);
        assert!((f.sspn[i] - 4444.444444444).abs() < 1e-6);
        assert!(f.sspn.iter().enumerate().all(|(j, n)| j == i || *n == 0.0));
    }

    /// Closed-form inverse of [[-iκ/2, 1], [1, -iκ/2]] applied to (-1, 0).
    fn two_site_oracle(kappa: f64) -> (Complex64, Complex64) {
        let a = c(0.0, -kappa / 2.0);
        let det = a * a - 1.0;
        (-a / det, c(1.0, 0.0) / det)
    }

    #[test]
    fn two_site_chain_closed_form() {
        for kappa in [0.03, 0.5, 2.0] {
            let mut m = Mat::<Complex64>::zeros(4, 4);
            m[(0, 1)] = c(1.0, 0.0);
            m[(1, 0)] = c(1.0, 0.0);
            let h = Hamiltonian::from_matrix(LatticeSpec::open(1, 1), m).unwrap();
            let f = solve_steady_state(&h, &PumpSpec::single(SiteId::new(1, 1, Sublattice::A)), DissipationSpec { kappa })
                .unwrap();
            let (x1, x2) = two_site_oracle(kappa);
            assert!((f.amplitudes[0] - x1).norm() < 1e-12);
            assert!((f.amplitudes[1] - x2).norm() < 1e-12);
            let r = f.sspn[0] / (f.sspn[0] + f.sspn[1]);
            let k2 = kappa * kappa / 4.0;
            assert!((r - k2 / (1.0 + k2)).abs() < 1e-12);
            if kappa == 2.0 {
                assert!((r - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_small_and_linear() {
        let spec = LatticeSpec::open(8, 8);
        let h = hamiltonian(&spec, &CouplingSpec::isotropic(0.5, 2.0 * PI / 3.0)).unwrap();
        let pump = PumpSpec::corners(&spec);
        let solver = SteadySolver::new(&h, 0.0, DissipationSpec { kappa: 0.03 }).unwrap();
        let f1 = solver.solve(&pump).unwrap();
        assert!(f1.residual <= 1e-10);
        let s = c(2.5, -1.0);
        let f2 = solver.solve(&pump.scaled(s)).unwrap();
        for (a, b) in f1.amplitudes.iter().zip(&f2.amplitudes) {
            assert!((a * s - b).norm() <= 1e-9 * b.norm().max(1.0));
        }
        let r1 = corner_r(&f1, &spec, NeighborhoodStrategy::Nearest6).unwrap();
        let r2 = corner_r(&f2, &spec, NeighborhoodStrategy::Nearest6).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_must_be_positive() {
        let spec = LatticeSpec::open(1, 1);
        let h = hamiltonian(&spec, &CouplingSpec::default()).unwrap();
        assert!(SteadySolver::new(&h, 0.0, DissipationSpec { kappa: 0.0 }).is_err());
        assert!(SteadySolver::new(&h, 0.0, DissipationSpec { kappa: -1.0 }).is_err());
    }

    /// Independent oracle: full distance sort over the whole lattice.
    fn nearest6_oracle(spec: &LatticeSpec) -> Vec<(usize, usize)> {
        let mut all: Vec<(usize, usize)> =
            (0..spec.width()).flat_map(|x| (0..spec.height()).map(move |y| (x, y))).collect();
        all.sort_by_key(|&(x, y)| (x * x + y * y, x, y));
        all.truncate(7);
        all
    }

    #[test]
    fn nearest6_matches_exhaustive_sort() {
        let spec = LatticeSpec::open(8, 8);
        let nb = corner_neighborhood(spec.corner_site(Corner::BottomLeft), &spec, NeighborhoodStrategy::Nearest6).unwrap();
        let got: Vec<(usize, usize)> = nb.iter().map(|s| spec.coords(*s)).collect();
        assert_eq!(got, nearest6_oracle(&spec));
        let mut as_set = got.clone();
        as_set.sort();
        assert_eq!(as_set, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn neighborhoods_are_mirror_images() {
        let spec = LatticeSpec::open(8, 8);
        let (w, h) = (spec.width() - 1, spec.height() - 1);
        for strat in NeighborhoodStrategy::ALL {
            let base: Vec<(usize, usize)> =
                corner_neighborhood(spec.corner_site(Corner::BottomLeft), &spec, strat).unwrap().iter().map(|s| spec.coords(*s)).collect();
            for corner in Corner::ALL {
                let nb = corner_neighborhood(spec.corner_site(corner), &spec, strat).unwrap();
                assert_eq!(nb[0], spec.corner_site(corner));
                let mapped: Vec<(usize, usize)> = nb
                    .iter()
                    .map(|s| {
                        let (x, y) = spec.coords(*s);
                        let x = if corner.inward().0 < 0 { w - x } else { x };
                        let y = if corner.inward().1 < 0 { h - y } else { y };
                        (x, y)
                    })
                    .collect();
                assert_eq!(mapped, base);
            }
        }
        assert_eq!(NeighborhoodStrategy::Nearest6.offsets().len(), 7);
        assert_eq!(NeighborhoodStrategy::Patch3x3.offsets().len(), 7);
        assert_eq!(NeighborhoodStrategy::Manhattan2.offsets().len(), 6);
    }

    #[test]
    fn non_corner_rejected() {
        let spec = LatticeSpec::open(8, 8);
        let r = corner_neighborhood(SiteId::new(2, 1, Sublattice::A), &spec, NeighborhoodStrategy::Nearest6);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn all_on_corner_gives_one() {
        let spec = LatticeSpec::open(2, 2);
        let mut sspn = vec![0.0; spec.num_sites()];
        sspn[0] = 3.0;
        let f = SteadyStateField { amplitudes: vec![c(0.0, 0.0); spec.num_sites()], sspn, residual: 0.0 };
        let site = spec.corner_site(Corner::BottomLeft);
        let nb = corner_neighborhood(site, &spec, NeighborhoodStrategy::Nearest6).unwrap();
        assert_eq!(concentration_factor(&f, site, &nb, &spec).unwrap().r, 1.0);
        let empty = SteadyStateField { sspn: vec![0.0; spec.num_sites()], ..f };
        assert!(matches!(concentration_factor(&empty, site, &nb, &spec), Err(Error::UndefinedR)));
    }

    #[test]
    fn sspn_grid_shape() {
        let spec = LatticeSpec::open(8, 8);
        let h = hamiltonian(&spec, &CouplingSpec::isotropic(0.5, 1.0)).unwrap();
        let f = solve_steady_state(&h, &PumpSpec::corners(&spec), DissipationSpec { kappa: 0.03 }).unwrap();
        let g = sspn_map(&f, &spec);
        assert_eq!((g.len(), g[0].len()), (16, 16));
        assert_eq!(g[0][0], f.sspn[0]);
    }
    #[test]
    fn crossings_interpolate() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(threshold_crossings(&xs, &ys, 0.5), vec![0.5, 2.5]);
        assert!(threshold_crossings(&xs, &ys, 2.0).is_empty());
    }

    #[test]
    fn overlap_of_span() {
        let p = vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!((profile_overlap(&[3.0, 4.0, 0.0], &p).unwrap() - 1.0).abs() < 1e-14);
        assert!((profile_overlap(&[0.0, 0.0, 2.0], &p).unwrap()).abs() < 1e-14);
        assert!((profile_overlap(&[1.0, 0.0, 1.0], &p[..1]).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(profile_overlap(&[0.0; 3], &p).is_err());
    }
}
