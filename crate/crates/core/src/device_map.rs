//! Circuit-QED realization plan: resonator frequency ladder and one parametric
//! modulation tone per link.
//!
//! Frequencies are in GHz (ω/2π), tone amplitudes in MHz of implied hopping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{HoppingTerm, LatticeSpec, SiteId, Sublattice};

pub const OMEGA0_RANGE_GHZ: (f64, f64) = (6.0, 10.0);
pub const DELTA_RANGE_GHZ: (f64, f64) = (0.5, 1.0);
pub const HOP_RANGE_MHZ: (f64, f64) = (5.0, 15.0);
const EPS: f64 = 1e-9;

/// Frequency ladder ω0 + {A: 0, B: Δ, C: 4Δ, D: 3Δ}.
pub fn ladder_step(s: Sublattice) -> f64 {
    match s {
        Sublattice::A => 0.0,
        Sublattice::B => 1.0,
        Sublattice::C => 4.0,
        Sublattice::D => 3.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub omega0_ghz: f64,
    pub delta_ghz: f64,
    pub site_ghz: Vec<f64>,
    pub lattice: LatticeSpec,
}

impl FrequencyPlan {
    pub fn frequency(&self, site: SiteId) -> Result<f64> {
        Ok(self.site_ghz[self.lattice.site_index(site)?])
    }

    pub fn gap(&self, a: SiteId, b: SiteId) -> Result<f64> {
        Ok((self.frequency(a)? - self.frequency(b)?).abs())
    }
}

fn in_range(v: f64, r: (f64, f64)) -> bool {
    v >= r.0 - EPS && v <= r.1 + EPS
}

pub fn assign_frequencies(spec: &LatticeSpec, omega0_ghz: f64, delta_ghz: f64) -> Result<FrequencyPlan> {
    spec.validate()?;
    if !in_range(omega0_ghz, OMEGA0_RANGE_GHZ) {
        return Err(Error::HardwareRange(format!("omega0 {omega0_ghz} GHz outside [6, 10] GHz")));
    }
    if !in_range(delta_ghz, DELTA_RANGE_GHZ) {
        return Err(Error::HardwareRange(format!("delta {delta_ghz} GHz outside [0.5, 1] GHz")));
    }
    let site_ghz = (0..spec.num_sites())
        .map(|i| omega0_ghz + delta_ghz * ladder_step(Sublattice::ALL[i % 4]))
        .collect();
    Ok(FrequencyPlan { omega0_ghz, delta_ghz, site_ghz, lattice: *spec })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationTone {
    pub from: SiteId,
    pub to: SiteId,
    pub tone_ghz: f64,
    pub amplitude_mhz: f64,
    pub phase: f64,
    /// Grounding coupler carrying this tone, identified by its lattice site.
    pub coupler: SiteId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationPlan {
    pub scale_mhz: f64,
    pub tones: Vec<ModulationTone>,
}

impl ModulationPlan {
    /// Tone indices grouped by coupler, in deterministic order.
    pub fn by_coupler(&self) -> BTreeMap<SiteId, Vec<usize>> {
        let mut m: BTreeMap<SiteId, Vec<usize>> = BTreeMap::new();
        for (k, t) in self.tones.iter().enumerate() {
            m.entry(t.coupler).or_default().push(k);
        }
        m
    }

    /// Distinct tone frequencies, ascending.
    pub fn tone_set(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for t in &self.tones {
            if !v.iter().any(|x| (x - t.tone_ghz).abs() < EPS) {
                v.push(t.tone_ghz);
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }

    /// Dimensionless links recovered from the tones.
    pub fn links(&self) -> Vec<HoppingTerm> {
        self.tones
            .iter()
            .map(|t| HoppingTerm {
                from: t.from,
                to: t.to,
                class: crate::lattice::LinkClass::Intra,
                amplitude: t.amplitude_mhz / self.scale_mhz,
                phase: t.phase,
            })
            .collect()
    }
}

/// One tone per link at the link's frequency gap. Each link is driven from the
/// coupler at its `from` end, so a coupler carries at most one horizontal and
/// one vertical tone.
pub fn tone_plan(links: &[HoppingTerm], freq: &FrequencyPlan, scale_mhz: f64) -> Result<ModulationPlan> {
    if !(scale_mhz > 0.0 && scale_mhz.is_finite()) {
        return Err(Error::Invalid(format!("scale must be > 0, got {scale_mhz}")));
    }
    let mut tones = Vec::with_capacity(links.len());
    for l in links {
        let amp = scale_mhz * l.amplitude;
        if !in_range(amp, HOP_RANGE_MHZ) {
            return Err(Error::HardwareRange(format!(
                "link {} -> {} ({}) needs {amp} MHz, outside [5, 15] MHz",
                l.from,
                l.to,
                l.class.name()
            )));
        }
        tones.push(ModulationTone {
            from: l.from,
            to: l.to,
            tone_ghz: freq.gap(l.from, l.to)?,
            amplitude_mhz: amp,
            phase: l.phase,
            coupler: l.from,
        });
    }
    Ok(ModulationPlan { scale_mhz, tones })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Tone does not equal the gap of the link it drives, or no allowed gap class.
    GapMismatch { tone: usize, tone_ghz: f64, gap_ghz: f64 },
    /// Tone within the guard band of a different-gap link sharing a site.
    Collision { tone: usize, other_from: SiteId, other_to: SiteId, separation_mhz: f64 },
    /// Two different links on one coupler driven at the same frequency.
    CouplerDuplicate { coupler: SiteId, tone_ghz: f64 },
    HardwareRange { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_plan(plan: &ModulationPlan, freq: &FrequencyPlan, guard_mhz: f64) -> Result<ValidationReport> {
    let d = freq.delta_ghz;
    let classes = [d, 2.0 * d, 4.0 * d];
    let mut v = Vec::new();
    if !in_range(freq.omega0_ghz, OMEGA0_RANGE_GHZ) || !in_range(freq.delta_ghz, DELTA_RANGE_GHZ) {
        v.push(Violation::HardwareRange { message: "frequency ladder outside hardware range".into() });
    }
    let guard_ghz = guard_mhz / 1000.0;
    let mut touching: BTreeMap<SiteId, Vec<usize>> = BTreeMap::new();
    for (k, t) in plan.tones.iter().enumerate() {
        touching.entry(t.from).or_default().push(k);
        touching.entry(t.to).or_default().push(k);
    }
    for (k, t) in plan.tones.iter().enumerate() {
        let gap = freq.gap(t.from, t.to)?;
        let matches = classes.iter().filter(|c| (t.tone_ghz - *c).abs() < EPS).count();
        if (t.tone_ghz - gap).abs() > EPS || matches != 1 {
            v.push(Violation::GapMismatch { tone: k, tone_ghz: t.tone_ghz, gap_ghz: gap });
        }
        if !in_range(t.amplitude_mhz, HOP_RANGE_MHZ) {
            v.push(Violation::HardwareRange { message: format!("tone {k} amplitude {} MHz", t.amplitude_mhz) });
        }
        let mut neighbours: Vec<usize> = touching[&t.from].iter().chain(&touching[&t.to]).copied().collect();
        neighbours.sort_unstable();
        neighbours.dedup();
        for o in neighbours {
            if o == k {
                continue;
            }
            let other = &plan.tones[o];
            let other_gap = freq.gap(other.from, other.to)?;
            if (other_gap - gap).abs() < EPS {
                continue;
            }
            let sep = (t.tone_ghz - other_gap).abs();
            if sep < guard_ghz {
                v.push(Violation::Collision {
                    tone: k,
                    other_from: other.from,
                    other_to: other.to,
                    separation_mhz: sep * 1000.0,
                });
            }
        }
    }
    for (coupler, idx) in plan.by_coupler() {
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                if (plan.tones[i].tone_ghz - plan.tones[j].tone_ghz).abs() < EPS {
                    v.push(Violation::CouplerDuplicate { coupler, tone_ghz: plan.tones[i].tone_ghz });
                }
            }
        }
    }
    Ok(ValidationReport { violations: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, enumerate_links, CouplingSpec, LinkClass};

    #[test]
    fn ladder_values() {
        let spec = LatticeSpec::open(8, 8);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        assert!((f.frequency(SiteId::new(3, 5, Sublattice::D)).unwrap() - 10.1).abs() < 1e-12);
        assert!(matches!(assign_frequencies(&spec, 8.0, 0.4), Err(Error::HardwareRange(_))));
        assert!(assign_frequencies(&spec, 11.0, 0.7).is_err());
    }

    /// Oracle: gaps per (sublattice pair, direction) by exhaustive enumeration on 2x2 cells.
    #[test]
    fn gap_classes_exhaustive() {
        let spec = LatticeSpec::open(2, 2);
        let f = assign_frequencies(&spec, 7.0, 0.6).unwrap();
        let d = 0.6;
        let want = |a: Sublattice, b: Sublattice| -> f64 {
            use Sublattice::*;
            match (a, b) {
                (A, B) | (B, A) | (C, D) | (D, C) => d,
                (B, D) | (D, B) => 2.0 * d,
                (A, C) | (C, A) => 4.0 * d,
                _ => f64::NAN,
            }
        };
        let links = enumerate_links(&spec, &CouplingSpec::default()).unwrap();
        assert_eq!(links.len(), 24);
        for l in links {
            let g = f.gap(l.from, l.to).unwrap();
            assert!((g - want(l.from.sublattice, l.to.sublattice)).abs() < 1e-12, "{l:?}");
        }
    }

    #[test]
    fn proportional_amplitudes() {
        let spec = LatticeSpec::open(8, 8);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        let links = enumerate_links(&spec, &CouplingSpec::isotropic(0.5, 1.0)).unwrap();
        let plan = tone_plan(&links, &f, 10.0).unwrap();
        for (t, l) in plan.tones.iter().zip(&links) {
            let want = if l.class == LinkClass::Intra { 5.0 } else { 10.0 };
            assert!((t.amplitude_mhz - want).abs() < 1e-12);
        }
    }

    #[test]
    fn range_checks_on_scale() {
        let spec = LatticeSpec::open(2, 2);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        let c = CouplingSpec { gamma: 1.0, lambda: [3.0, 3.0, 3.0, 3.0], ..Default::default() };
        let links = enumerate_links(&spec, &c).unwrap();
        match tone_plan(&links, &f, 10.0) {
            Err(Error::HardwareRange(m)) => assert!(m.contains("lambda")),
            other => panic!("{other:?}"),
        }
        assert!(tone_plan(&links, &f, 5.0).is_ok());
    }

    #[test]
    fn round_trip_hamiltonian() {
        let spec = LatticeSpec::open(8, 8);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        let c = CouplingSpec::isotropic(0.6, 2.0);
        let links = enumerate_links(&spec, &c).unwrap();
        let plan = tone_plan(&links, &f, 10.0).unwrap();
        let h0 = build_hamiltonian(&links, &spec).unwrap();
        let h1 = build_hamiltonian(&plan.links(), &spec).unwrap();
        for i in 0..h0.dim() {
            for j in 0..h0.dim() {
                assert!((h0.get(i, j) - h1.get(i, j)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn canonical_plan_validates() {
        let spec = LatticeSpec::open(8, 8);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        let plan = tone_plan(&enumerate_links(&spec, &CouplingSpec::isotropic(0.5, 1.0)).unwrap(), &f, 10.0).unwrap();
        let rep = validate_plan(&plan, &f, 50.0).unwrap();
        assert!(rep.ok(), "{:?}", rep.violations);
        let set = plan.tone_set();
        assert_eq!(set.len(), 3);
        for (a, b) in set.iter().zip([0.7, 1.4, 2.8]) {
            assert!((a - b).abs() < 1e-12);
        }
        for idx in plan.by_coupler().values() {
            assert!(idx.len() <= 2);
        }
    }

    #[test]
    fn wrong_tone_collides() {
        let spec = LatticeSpec::open(2, 2);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        let mut plan = tone_plan(&enumerate_links(&spec, &CouplingSpec::default()).unwrap(), &f, 10.0).unwrap();
        let k = plan.tones.iter().position(|t| t.from.sublattice == Sublattice::A && t.to.sublattice == Sublattice::B).unwrap();
        plan.tones[k].tone_ghz = 1.4;
        let rep = validate_plan(&plan, &f, 50.0).unwrap();
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::GapMismatch { tone, .. } if *tone == k)));
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::Collision { tone, .. } if *tone == k)));
    }

    #[test]
    fn wide_guard_band_reports() {
        let spec = LatticeSpec::open(2, 2);
        let f = assign_frequencies(&spec, 8.0, 0.7).unwrap();
        let plan = tone_plan(&enumerate_links(&spec, &CouplingSpec::default()).unwrap(), &f, 10.0).unwrap();
        let rep = validate_plan(&plan, &f, 2000.0).unwrap();
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::Collision { .. })));
    }
}
