//! Diagonalization, bulk/edge/corner classification and zero-energy metrics.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Corner, Hamiltonian, LatticeSpec};

/// Eigenvalues ascending, eigenvectors as matching unit-norm columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Mat<Complex64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.col(k).iter().copied().collect()
    }

    /// max_k ‖H v_k − E_k v_k‖₂.
    pub fn max_residual(&self, h: &Hamiltonian) -> f64 {
        let hv = h.matrix() * &self.vectors;
        let n = self.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| (hv[(i, k)] - self.vectors[(i, k)] * self.values[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// max |V†V − I|.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let n = self.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).norm());
            }
        }
        worst
    }
}

fn check_hermitian(h: &Hamiltonian) -> Result<()> {
    let err = h.hermiticity_error();
    if err > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

pub fn diagonalize(h: &Hamiltonian) -> Result<EigenSystem> {
    check_hermitian(h)?;
    let evd = h
        .matrix()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let values: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(EigenSystem { values, vectors: evd.U().to_owned() })
}

/// Spectrum only, ascending.
pub fn eigenvalues(h: &Hamiltonian) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    h.matrix()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{e:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    /// Zero-energy window.
    pub eps_zero: f64,
    /// Minimum corner-patch weight of a corner mode.
    pub w_corner: f64,
    /// Minimum boundary weight of an edge mode.
    pub w_edge: f64,
    /// Side of the square corner patch, in sites.
    pub corner_patch: usize,
    /// Depth of the boundary ring, in sites.
    pub boundary_ring: usize,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        ClassifierThresholds { eps_zero: 0.05, w_corner: 0.5, w_edge: 0.6, corner_patch: 3, boundary_ring: 2 }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_zero.is_finite() && self.eps_zero >= 0.0) {
            return Err(Error::Invalid("eps_zero must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.w_corner) || !(0.0..=1.0).contains(&self.w_edge) {
            return Err(Error::Invalid("weights must lie in [0, 1]".into()));
        }
        if self.corner_patch == 0 || self.boundary_ring == 0 {
            return Err(Error::Invalid("corner_patch and boundary_ring must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeClass {
    Bulk,
    Edge,
    Corner,
}

impl ModeClass {
    pub fn name(self) -> &'static str {
        match self {
            ModeClass::Bulk => "bulk",
            ModeClass::Edge => "edge",
            ModeClass::Corner => "corner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeInfo {
    pub energy: f64,
    pub class: ModeClass,
    pub corner_weight: f64,
    pub boundary_weight: f64,
    pub ipr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCatalog {
    pub modes: Vec<ModeInfo>,
    /// Corner modes found at each corner, in `Corner::ALL` order.
    pub corner_hosts: [usize; 4],
}

impl ModeCatalog {
    pub fn count(&self, class: ModeClass) -> usize {
        self.modes.iter().filter(|m| m.class == class).count()
    }

    /// Corners hosting at least one corner mode.
    pub fn host_corners(&self) -> Vec<Corner> {
        Corner::ALL.into_iter().filter(|c| self.corner_hosts[c.index()] > 0).collect()
    }
}

/// Site indices of each corner patch, corner site first.
pub fn corner_patches(spec: &LatticeSpec, patch: usize) -> [Vec<usize>; 4] {
    Corner::ALL.map(|c| {
        let mut sites = Vec::with_capacity(patch * patch);
        for b in 0..patch {
            for a in 0..patch {
                if let Some((x, y)) = spec.from_corner(c, a, b) {
                    sites.push(spec.index_at(x, y));
                }
            }
        }
        sites.sort_by_key(|&s| s != spec.corner_index(c));
        sites
    })
}

/// Mask of the boundary ring together with the corner patches.
pub fn boundary_mask(spec: &LatticeSpec, th: &ClassifierThresholds) -> Vec<bool> {
    let (w, h) = (spec.width(), spec.height());
    let r = th.boundary_ring;
    let mut mask: Vec<bool> = (0..spec.num_sites())
        .map(|i| {
            let (x, y) = spec.coords_of_index(i);
            x < r || y < r || x + r >= w || y + r >= h
        })
        .collect();
    for p in corner_patches(spec, th.corner_patch) {
        for s in p {
            mask[s] = true;
        }
    }
    mask
}

fn small_hermitian_eigen(g: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let evd = g.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Corner modes per corner inside the zero-energy block spanned by `block`.
///
/// For each corner the patch-weight operator is diagonalized within the block; a
/// projected state is a corner mode when its patch weight reaches `w_corner` and
/// its intensity inside the patch peaks on the corner site itself.
fn corner_modes_in_block(
    es: &EigenSystem,
    block: &[usize],
    patches: &[Vec<usize>; 4],
    w_corner: f64,
) -> Result<[usize; 4]> {
    let k = block.len();
    let mut hosts = [0usize; 4];
    if k == 0 {
        return Ok(hosts);
    }
    for (c, patch) in patches.iter().enumerate() {
        let vp = Mat::<Complex64>::from_fn(patch.len(), k, |r, j| es.vectors[(patch[r], block[j])]);
        let g = vp.adjoint() * &vp;
        let (w, u) = small_hermitian_eigen(&g)?;
        let states = vp * &u;
        // Degenerate patch eigenvalues leave the basis free; inside such a cluster
        // only the component along the corner site can peak there.
        let mut m = 0;
        while m < w.len() {
            let mut end = m + 1;
            while end < w.len() && w[end] - w[end - 1] <= 1e-9 {
                end += 1;
            }
            if w[m] >= w_corner {
                let psi: Vec<Complex64> = (0..patch.len())
                    .map(|r| (m..end).map(|q| states[(0, q)].conj() * states[(r, q)]).sum())
                    .collect();
                let peak = (0..patch.len())
                    .max_by(|&a, &b| psi[a].norm_sqr().total_cmp(&psi[b].norm_sqr()).then(b.cmp(&a)))
                    .unwrap_or(0);
                if psi[0].norm_sqr() > 0.0 && peak == 0 {
                    hosts[c] += 1;
                }
            }
            m = end;
        }
    }
    Ok(hosts)
}

pub fn classify_modes(es: &EigenSystem, spec: &LatticeSpec, th: &ClassifierThresholds) -> Result<ModeCatalog> {
    th.validate()?;
    let n = spec.num_sites();
    if es.vectors.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: es.vectors.nrows() });
    }
    let patches = corner_patches(spec, th.corner_patch);
    let mut in_patch = vec![false; n];
    for p in &patches {
        for &s in p {
            in_patch[s] = true;
        }
    }
    let ring = boundary_mask(spec, th);

    let mut modes: Vec<ModeInfo> = (0..es.len())
        .map(|k| {
            let col = es.vectors.col(k);
            let (mut cw, mut bw, mut p4) = (0.0, 0.0, 0.0);
            for (i, z) in col.iter().enumerate() {
                let w = z.norm_sqr();
                if in_patch[i] {
                    cw += w;
                }
                if ring[i] {
                    bw += w;
                }
                p4 += w * w;
            }
            let class = if bw >= th.w_edge { ModeClass::Edge } else { ModeClass::Bulk };
            ModeInfo { energy: es.values[k], class, corner_weight: cw, boundary_weight: bw, ipr: p4 }
        })
        .collect();

    let block: Vec<usize> = (0..es.len()).filter(|&k| es.values[k].abs() <= th.eps_zero).collect();
    let mut hosts = corner_modes_in_block(es, &block, &patches, th.w_corner)?;
    let total: usize = hosts.iter().sum();
    if total > block.len() {
        // Cannot host more corner modes than the block has states.
        let mut excess = total - block.len();
        for h in hosts.iter_mut().rev() {
            let cut = excess.min(*h);
            *h -= cut;
            excess -= cut;
        }
    }
    let total: usize = hosts.iter().sum();
    let mut ranked = block.clone();
    ranked.sort_by(|&a, &b| modes[b].corner_weight.total_cmp(&modes[a].corner_weight).then(a.cmp(&b)));
    for &k in ranked.iter().take(total) {
        modes[k].class = ModeClass::Corner;
    }
    Ok(ModeCatalog { modes, corner_hosts: hosts })
}

/// Fifth-smallest |E|: the gap at zero once up to four corner modes are set aside.
pub fn zero_gap(values: &[f64]) -> Result<f64> {
    if values.len() < 5 {
        return Err(Error::Size { needed: 5, have: values.len() });
    }
    let mut a: Vec<f64> = values.iter().map(|e| e.abs()).collect();
    a.sort_by(f64::total_cmp);
    Ok(a[4])
}

pub fn count_zecm(cat: &ModeCatalog) -> usize {
    cat.count(ModeClass::Corner)
}

/// Σ|v|⁴ of the normalized vector.
pub fn ipr(v: &[Complex64]) -> f64 {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return 0.0;
    }
    v.iter().map(|z| (z.norm_sqr() / norm).powi(2)).sum()
}
