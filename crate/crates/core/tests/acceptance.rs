//! Acceptance suite. Prints one PASS/FAIL line per criterion, followed by the
//! measured values. Run a subset with `cargo test --test acceptance -- 2 3`.
//!
//! The process exits 0 once every criterion has been evaluated, whatever the
//! verdicts. Set `HOTI_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hoti::device_map::{assign_frequencies, tone_plan, validate_plan};
use hoti::lattice::{
    angle_distance, build_hamiltonian, enumerate_links, gauge_transform, hamiltonian, plaquette_fluxes, Corner,
    CouplingSpec, FluxPattern, Hamiltonian, LatticeSpec, SiteId, Sublattice,
};
use hoti::phase_scan::{analyze_point, anisotropy_fixed, critical_gammas, CriticalOptions};
use hoti::spectrum::{classify_modes, count_zecm, diagonalize, eigenvalues, ClassifierThresholds};
use hoti::steady_state::{
    corner_mode_profiles, corner_r, profile_overlap, r_vs_phi, solve_steady_state, threshold_crossings, top_sites,
    DissipationSpec, NeighborhoodStrategy, PumpSpec,
};

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

fn lattice() -> LatticeSpec {
    LatticeSpec::open(8, 8)
}

fn c1_critical_points() -> Outcome {
    let targets = [0.41, 0.45, 0.76, 0.90];
    let crit = critical_gammas(&lattice(), &CouplingSpec::default(), &ClassifierThresholds::default(), &CriticalOptions::default())
        .expect("critical search");
    let mut pass = true;
    let mut details = Vec::new();
    let mut got = Vec::new();
    for (cp, t) in crit.iter().zip(targets) {
        let ok = cp.gamma.is_some_and(|g| (g - t).abs() <= 0.02);
        pass &= ok;
        let g = cp.gamma.map_or("none".to_string(), |g| format!("{g:.4}"));
        details.push(format!(
            "{}: {} (target {t:.2} +/- 0.02, {:?} on phi in ({:.4}, {:.4})) {}",
            cp.label,
            g,
            cp.indicator,
            cp.window.0,
            cp.window.1,
            if ok { "ok" } else { "off" }
        ));
        got.push(g);
    }
    Outcome { pass, summary: format!("gamma_c = [{}]", got.join(", ")), details }
}

fn c2_gamma_zero() -> Outcome {
    let spec = lattice();
    let h = hamiltonian(&spec, &CouplingSpec::isotropic(0.0, PI)).unwrap();
    let es = diagonalize(&h).unwrap();
    let zeros: Vec<usize> = (0..es.len()).filter(|&k| es.values[k].abs() <= 1e-10).collect();
    let plus = es.values.iter().filter(|e| (*e - 1.0).abs() <= 1e-10).count();
    let minus = es.values.iter().filter(|e| (*e + 1.0).abs() <= 1e-10).count();
    // Every corner site must lie inside the zero-mode subspace.
    let corner_weight: Vec<f64> = Corner::ALL
        .iter()
        .map(|&c| {
            let i = spec.corner_index(c);
            zeros.iter().map(|&k| es.vectors[(i, k)].norm_sqr()).sum()
        })
        .collect();
    let localized = zeros.len() == 4 && corner_weight.iter().all(|w| (w - 1.0).abs() <= 1e-10);
    let pass = localized && plus == 28 && minus == 28;
    Outcome {
        pass,
        summary: format!("zero modes {}, E=+1 x{plus}, E=-1 x{minus}", zeros.len()),
        details: vec![
            "evaluated at phi = pi; at phi = 0 the isolated plaquettes add further zeros".into(),
            format!("corner-site weight in zero subspace: {corner_weight:.12?}"),
        ],
    }
}

fn c3_discrimination() -> Outcome {
    let spec = lattice();
    let mut pass = true;
    let mut details = Vec::new();
    for (phi, want, label) in [(2.0 * PI / 3.0, 4, "2pi/3"), (2.0 * PI / 10.0, 0, "2pi/10")] {
        let es = diagonalize(&hamiltonian(&spec, &CouplingSpec::isotropic(0.5, phi)).unwrap()).unwrap();
        let counts: Vec<usize> = (0..=12)
            .map(|k| {
                let th = ClassifierThresholds { eps_zero: 0.02 + 0.005 * k as f64, ..ClassifierThresholds::default() };
                count_zecm(&classify_modes(&es, &spec, &th).unwrap())
            })
            .collect();
        let ok = counts.iter().all(|&c| c == want);
        pass &= ok;
        details.push(format!("phi = {label}: counts over eps 0.020..0.080 step 0.005 = {counts:?} (want {want})"));
    }
    Outcome { pass, summary: "gamma = 0.5".into(), details }
}

fn c4_r_jump() -> Outcome {
    let spec = lattice();
    let n = 128;
    let cell = TAU / n as f64;
    let phis: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let template = CouplingSpec::default();
    let mut pass = true;
    let mut details = Vec::new();
    let mut summary = String::new();
    let mut reference: Option<Vec<Vec<f64>>> = None;
    for kappa in [0.03, 0.01, 0.005] {
        for strategy in NeighborhoodStrategy::ALL {
            let pts = r_vs_phi(&phis, &template, kappa, &spec, strategy).unwrap();
            let primary = strategy == NeighborhoodStrategy::Nearest6;
            let mut per_corner = Vec::new();
            for c in Corner::ALL {
                let r: Vec<f64> = pts.iter().map(|p| p.r[c.index()]).collect();
                let cross = threshold_crossings(&phis, &r, 0.7);
                let mid_min = phis.iter().zip(&r).filter(|(p, _)| **p > PI / 2.0 && **p < 1.5 * PI).map(|(_, v)| *v).fold(f64::MAX, f64::min);
                let low_max = phis.iter().zip(&r).filter(|(p, _)| **p > 0.0 && **p < PI / 2.0).map(|(_, v)| *v).fold(f64::MIN, f64::max);
                let near = cross.len() == 2 && (cross[0] - PI / 2.0).abs() <= cell && (cross[1] - 1.5 * PI).abs() <= cell;
                let ok = near && mid_min > 0.7 && low_max < 0.7;
                if primary {
                    pass &= ok;
                    per_corner.push(cross.clone());
                }
                details.push(format!(
                    "kappa {kappa} {} {}: crossings {:?}, min R (pi/2, 3pi/2) {:.4}, max R (0, pi/2) {:.4}, max R {:.4} {}",
                    strategy.name(),
                    c.name(),
                    cross.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
                    mid_min,
                    low_max,
                    r.iter().cloned().fold(f64::MIN, f64::max),
                    if ok { "ok" } else { "off" }
                ));
            }
            if primary {
                if kappa == 0.03 {
                    summary = format!(
                        "kappa 0.03 nearest6: {} crossings at bottom_left, max R = {:.4}",
                        per_corner[0].len(),
                        pts.iter().map(|p| p.r[0]).fold(f64::MIN, f64::max)
                    );
                }
                match &reference {
                    None => reference = Some(per_corner),
                    Some(r0) => {
                        let stable = r0.iter().zip(&per_corner).all(|(a, b)| {
                            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < cell)
                        });
                        pass &= stable;
                        details.push(format!("kappa {kappa}: crossings within one cell of kappa 0.03: {stable}"));
                    }
                }
            }
        }
    }
    Outcome { pass, summary, details }
}

fn c5_anisotropy() -> Outcome {
    let spec = lattice();
    let th = ClassifierThresholds::default();
    let cases: [((f64, f64), usize, &[Corner]); 4] = [
        ((3.0, 3.0), 4, &Corner::ALL),
        ((3.0, 0.5), 2, &[Corner::BottomLeft, Corner::BottomRight]),
        ((0.5, 3.0), 2, &[Corner::BottomLeft, Corner::TopLeft]),
        ((0.5, 0.5), 0, &[]),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    let mut counts = Vec::new();
    for ((l1, l4), want, corners) in cases {
        let mut c = anisotropy_fixed();
        c.lambda[0] = l1;
        c.lambda[3] = l4;
        let (pt, cat) = analyze_point(&spec, &c, &th).unwrap();
        let hosts: BTreeSet<Corner> = cat.host_corners().into_iter().collect();
        let want_hosts: BTreeSet<Corner> = corners.iter().copied().collect();
        let h = hamiltonian(&spec, &c).unwrap();
        let field = solve_steady_state(&h, &PumpSpec::corners(&spec), DissipationSpec { kappa: 0.03 }).unwrap();
        let top: BTreeSet<usize> = top_sites(&field, want).into_iter().collect();
        let want_top: BTreeSet<usize> = corners.iter().map(|&k| spec.corner_index(k)).collect();
        let ok = pt.zecm_count == want && hosts == want_hosts && top == want_top;
        pass &= ok;
        counts.push(pt.zecm_count);
        let top_xy: Vec<(usize, usize)> = top.iter().map(|&i| spec.coords_of_index(i)).collect();
        details.push(format!(
            "(lambda1, lambda4) = ({l1}, {l4}): count {} (want {want}), hosts {:?} (want {:?}), top-{want} SSPN sites {:?} {}",
            pt.zecm_count,
            hosts.iter().map(|c| c.name()).collect::<Vec<_>>(),
            want_hosts.iter().map(|c| c.name()).collect::<Vec<_>>(),
            top_xy,
            if ok { "ok" } else { "off" }
        ));
    }
    Outcome { pass, summary: format!("counts {counts:?}"), details }
}

fn check(details: &mut Vec<String>, name: &str, value: f64, tol: f64) -> bool {
    let ok = value <= tol;
    details.push(format!("{name}: {value:.3e} (tol {tol:e}) {}", if ok { "ok" } else { "off" }));
    ok
}

fn c6_properties() -> Outcome {
    let spec = lattice();
    let params = [
        CouplingSpec::isotropic(0.5, 2.0 * PI / 3.0),
        CouplingSpec::isotropic(0.2, PI),
        CouplingSpec::isotropic(1.1, 0.7),
        CouplingSpec { gamma: 0.8, lambda: [3.0, 0.5, 3.0, 1.0], phi: 1.3, flux_pattern: FluxPattern::IntracellOnly },
    ];
    let mut d = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut herm, mut chiral, mut gauge, mut mirror) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for c in &params {
        let h = hamiltonian(&spec, c).unwrap();
        herm = herm.max(h.hermiticity_error());
        let e = eigenvalues(&h).unwrap();
        let n = e.len();
        chiral = chiral.max((0..n).map(|k| (e[k] + e[n - 1 - k]).abs()).fold(0.0, f64::max));
        let chi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let g = eigenvalues(&gauge_transform(&h, &chi).unwrap()).unwrap();
        gauge = gauge.max(e.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let m = eigenvalues(&hamiltonian(&spec, &c.with_phi(TAU - c.phi)).unwrap()).unwrap();
        mirror = mirror.max(e.iter().zip(&m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    pass &= check(&mut d, "hermiticity", herm, 1e-15);
    pass &= check(&mut d, "chiral pairing", chiral, 1e-10);
    pass &= check(&mut d, "gauge invariance", gauge, 1e-10);
    pass &= check(&mut d, "spectrum mirror", mirror, 1e-10);

    let mut flux = 0.0f64;
    for k in 0..=16 {
        let phi = TAU * k as f64 / 16.0;
        for p in plaquette_fluxes(&hamiltonian(&spec, &CouplingSpec::isotropic(0.5, phi)).unwrap()).unwrap() {
            flux = flux.max(angle_distance(p.flux, phi));
        }
    }
    pass &= check(&mut d, "plaquette flux (17 values)", flux, 1e-12);

    let phis: Vec<f64> = (1..16).map(|k| TAU * k as f64 / 16.0).collect();
    let pts = r_vs_phi(&phis, &CouplingSpec::default(), 0.03, &spec, NeighborhoodStrategy::Nearest6).unwrap();
    let mut rmirror = 0.0f64;
    for (k, p) in pts.iter().enumerate() {
        let q = &pts[phis.len() - 1 - k];
        // φ -> 2π - φ exchanges top and bottom corners.
        for (a, b) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            rmirror = rmirror.max((p.r[a] - q.r[b]).abs());
        }
    }
    pass &= check(&mut d, "R-curve mirror (top/bottom corners exchanged)", rmirror, 1e-8);

    let h = hamiltonian(&spec, &params[0]).unwrap();
    let pump = PumpSpec::corners(&spec);
    let diss = DissipationSpec { kappa: 0.03 };
    let f1 = solve_steady_state(&h, &pump, diss).unwrap();
    pass &= check(&mut d, "steady residual / |P|", f1.residual, 1e-10);
    let f2 = solve_steady_state(&h, &pump.scaled(Complex64::new(-2.5, 1.5)), diss).unwrap();
    let (r1, r2) = (corner_r(&f1, &spec, NeighborhoodStrategy::Nearest6).unwrap(), corner_r(&f2, &spec, NeighborhoodStrategy::Nearest6).unwrap());
    pass &= check(&mut d, "R under pump scaling", r1.iter().zip(&r2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max), 1e-12);

    let mut two_site = 0.0f64;
    for kappa in [0.03, 0.5, 2.0] {
        let mut m = Mat::<Complex64>::zeros(4, 4);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        let h = Hamiltonian::from_matrix(LatticeSpec::open(1, 1), m).unwrap();
        let f = solve_steady_state(&h, &PumpSpec::single(SiteId::new(1, 1, Sublattice::A)), DissipationSpec { kappa }).unwrap();
        // Closed form of [[-iκ/2, 1], [1, -iκ/2]] x = -(1, 0).
        let a = Complex64::new(0.0, -kappa / 2.0);
        let det = a * a - 1.0;
        two_site = two_site.max((f.amplitudes[0] + a / det).norm()).max((f.amplitudes[1] - 1.0 / det).norm());
    }
    pass &= check(&mut d, "two-site steady state", two_site, 1e-12);

    let freq = assign_frequencies(&spec, 8.0, 0.7).unwrap();
    let links = enumerate_links(&spec, &CouplingSpec::isotropic(0.5, 2.0 * PI / 3.0)).unwrap();
    let plan = tone_plan(&links, &freq, 10.0).unwrap();
    let h0 = build_hamiltonian(&links, &spec).unwrap();
    let h1 = build_hamiltonian(&plan.links(), &spec).unwrap();
    let mut rt = 0.0f64;
    for i in 0..h0.dim() {
        for j in 0..h0.dim() {
            rt = rt.max((h0.get(i, j) - h1.get(i, j)).norm());
        }
    }
    pass &= check(&mut d, "device plan round trip", rt, 1e-12);
    let set = plan.tone_set();
    let set_ok = set.len() == 3 && set.iter().zip([0.7, 1.4, 2.8]).all(|(a, b)| (a - b).abs() <= 1e-12);
    let valid = validate_plan(&plan, &freq, 50.0).unwrap().ok();
    pass &= set_ok && valid;
    d.push(format!("tone set {set:?} GHz = {{D, 2D, 4D}} with D = 0.7: {set_ok}; plan violations: {}", !valid));
    Outcome { pass, summary: format!("{} checks", d.len()), details: d }
}

fn c7_single_mode() -> Outcome {
    let spec = lattice();
    let c = CouplingSpec::isotropic(0.5, 2.0 * PI / 3.0);
    let h = hamiltonian(&spec, &c).unwrap();
    let es = diagonalize(&h).unwrap();
    let cat = classify_modes(&es, &spec, &ClassifierThresholds::default()).unwrap();
    let profiles = corner_mode_profiles(&es, &cat, &spec);
    let field = solve_steady_state(&h, &PumpSpec::corners(&spec), DissipationSpec { kappa: 1e-4 }).unwrap();
    let overlap = profile_overlap(&field.sspn, &profiles).unwrap();
    Outcome {
        pass: overlap >= 0.99,
        summary: format!("projection {overlap:.9} (need >= 0.99)"),
        details: vec![format!("{} corner modes, {} profiles, residual {:.2e}", count_zecm(&cat), profiles.len(), field.residual)],
    }
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let suite: [(usize, &str, fn() -> Outcome); 7] = [
        (1, "critical-point regression", c1_critical_points),
        (2, "gamma = 0 exact structure", c2_gamma_zero),
        (3, "corner-mode discrimination", c3_discrimination),
        (4, "concentration-factor jump", c4_r_jump),
        (5, "anisotropic corner map", c5_anisotropy),
        (6, "property suite", c6_properties),
        (7, "single-mode limit", c7_single_mode),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (n, name, f) in suite {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        ran += 1;
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n} {} {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.summary, t.elapsed().as_secs_f64());
        for l in &o.details {
            println!("    {l}");
        }
    }
    println!("acceptance: {}/{ran} passed", ran - failed);
    if failed > 0 && std::env::var_os("HOTI_ACCEPTANCE_STRICT").is_some_and(|v| v != "0") {
        std::process::exit(1);
    }
}
