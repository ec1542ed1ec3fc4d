use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hoti::config::{parse_config, RunConfig};
use hoti::device_map::{assign_frequencies, tone_plan, validate_plan};
use hoti::lattice::{enumerate_links, hamiltonian, Corner};
use hoti::output::{self, json_document, write_file};
use hoti::phase_scan::{
    anisotropy_fixed, anisotropy_map, butterfly, critical_gammas, hoti_phase_map, CriticalOptions, GridSpec,
};
use hoti::spectrum::{classify_modes, count_zecm, diagonalize, ModeClass};
use hoti::steady_state::{
    corner_r, r_vs_phi, solve_steady_state, sspn_map, threshold_crossings, top_sites, DissipationSpec,
    NeighborhoodStrategy,
};
use hoti::svg::{self, FigureKind, FigureSpec};
use hoti::{Error, Result};

#[derive(Parser)]
#[command(name = "hoti", version, about = "Flux-tuned corner modes on the 2D SSH lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum against flux at fixed γ, classified by mode type.
    Butterfly(Common),
    /// (γ, φ) phase map and the four critical γ values.
    PhaseMap(Common),
    /// (λ1, λ4) corner-mode map. Fixed parameters default to γ=1, λ2=λ3=3, φ=π.
    AnisoMap(Common),
    /// Driven-dissipative steady state and concentration factors.
    Steady(Common),
    /// Concentration factor against flux under the four-corner pump.
    RSweep(Common),
    /// Resonator frequencies and modulation tones for the current couplings.
    DevicePlan(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV, JSON and SVG output (overrides `out_dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Accepts expressions such as 2pi/3.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Four comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config { line: None, message: msg.into() }
}

/// Parse a value as TOML if possible, otherwise as a bare string.
fn toml_value(s: &str) -> toml::Value {
    format!("v = {s}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}

struct Loaded {
    cfg: RunConfig,
    explicit: BTreeMap<String, toml::Value>,
}

fn load(c: &Common) -> Result<Loaded> {
    let text = match &c.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.display().to_string(), message: e.to_string() })?,
        None => String::new(),
    };
    let mut over: Vec<(String, toml::Value)> = Vec::new();
    if let Some(v) = c.nx {
        over.push(("nx".into(), toml::Value::Integer(v as i64)));
    }
    if let Some(v) = c.ny {
        over.push(("ny".into(), toml::Value::Integer(v as i64)));
    }
    for (k, v) in [("gamma", &c.gamma), ("phi", &c.phi), ("kappa", &c.kappa)] {
        if let Some(v) = v {
            over.push((k.into(), toml_value(v)));
        }
    }
    if let Some(l) = &c.lambda {
        let items: Vec<toml::Value> = l.split(',').map(|s| toml_value(s.trim())).collect();
        over.push(("lambda".into(), toml::Value::Array(items)));
    }
    for kv in &c.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("--set expects key=value, got '{kv}'")))?;
        over.push((k.trim().into(), toml_value(v.trim())));
    }
    if let Some(d) = &c.out_dir {
        over.push(("out_dir".into(), toml::Value::String(d.display().to_string())));
    }
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config { line: None, message: e.message().to_string() })?;
    if over.is_empty() {
        let cfg = parse_config(&text)?;
        return Ok(Loaded { cfg, explicit: table.into_iter().collect() });
    }
    if c.config.is_some() {
        parse_config(&text)?;
    }
    for (k, v) in over {
        table.insert(k, v);
    }
    let merged = toml::to_string(&table).map_err(|e| bad(e.to_string()))?;
    // Line numbers would point into the merged document, not the user's file.
    let cfg = parse_config(&merged).map_err(|e| match e {
        Error::Config { message, .. } => Error::Config { line: None, message },
        other => other,
    })?;
    Ok(Loaded { cfg, explicit: table.into_iter().collect() })
}

struct Emitter {
    dir: PathBuf,
    written: Vec<String>,
}

impl Emitter {
    fn new(dir: &str) -> Self {
        Emitter { dir: PathBuf::from(dir), written: Vec::new() }
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.dir.join(name);
        write_file(&p, contents)?;
        self.written.push(p.display().to_string());
        Ok(())
    }
}

fn run_butterfly(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let phis = cfg.phi_axis.values();
    let gamma = cfg.coupling.gamma;
    let slices = butterfly(gamma, &phis, &cfg.lattice, &cfg.coupling, &cfg.classifier)?;
    out.put("butterfly.csv", &output::butterfly_csv(&slices))?;
    let counts: Vec<usize> = slices.iter().map(|s| s.classes.iter().filter(|c| **c == ModeClass::Corner).count()).collect();
    out.put(
        "butterfly.json",
        &json_document(
            "butterfly",
            json!({
                "gamma": gamma,
                "lambda": cfg.coupling.lambda,
                "phi": phis,
                "corner_mode_count": counts,
                "sites": cfg.lattice.num_sites(),
            }),
        )?,
    )?;
    let fig = FigureSpec::new(FigureKind::ButterflyScatter, &format!("spectrum, gamma = {gamma}"), "phi", "E");
    out.put("butterfly.svg", &svg::butterfly_svg(&fig, &slices)?)
}

fn run_phase_map(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let grid = GridSpec { axis1: cfg.gamma_axis.clone(), axis2: cfg.phi_axis.clone(), fixed: cfg.coupling };
    let d = hoti_phase_map(&grid, &cfg.lattice, &cfg.classifier)?;
    let opts = CriticalOptions {
        gap_tol: cfg.gap_tol,
        gamma_min: cfg.gamma_axis.min,
        gamma_max: cfg.gamma_axis.max,
        ..CriticalOptions::default()
    };
    let crit = critical_gammas(&cfg.lattice, &cfg.coupling, &cfg.classifier, &opts)?;
    out.put("phase_map.csv", &output::phase_csv(&d))?;
    out.put(
        "phase_map.json",
        &json_document(
            "phase_map",
            json!({
                "lambda": cfg.coupling.lambda,
                "gamma_axis": grid.axis1,
                "phi_axis": grid.axis2,
                "critical_gamma": crit,
                "critical_lines": d.critical_lines,
            }),
        )?,
    )?;
    let fig = FigureSpec::new(FigureKind::PhaseHeatmap, "corner modes", "gamma", "phi");
    out.put("phase_map.svg", &svg::phase_heatmap_svg(&fig, &d, |p| p.zecm_count as f64)?)
}

fn run_aniso_map(cfg: &RunConfig, explicit: &BTreeMap<String, toml::Value>, out: &mut Emitter) -> Result<()> {
    let mut fixed = anisotropy_fixed();
    if explicit.contains_key("gamma") {
        fixed.gamma = cfg.coupling.gamma;
    }
    if explicit.contains_key("phi") {
        fixed.phi = cfg.coupling.phi;
    }
    if explicit.contains_key("lambda") {
        fixed.lambda = cfg.coupling.lambda;
    }
    fixed.flux_pattern = cfg.coupling.flux_pattern;
    let grid = GridSpec { axis1: cfg.lambda1_axis.clone(), axis2: cfg.lambda4_axis.clone(), fixed };
    let d = anisotropy_map(&grid, &cfg.lattice, &cfg.classifier)?;
    out.put("aniso_map.csv", &output::phase_csv(&d))?;
    out.put(
        "aniso_map.json",
        &json_document(
            "aniso_map",
            json!({
                "fixed": fixed,
                "lambda1_axis": grid.axis1,
                "lambda4_axis": grid.axis2,
                "critical_lines": d.critical_lines,
            }),
        )?,
    )?;
    let fig = FigureSpec::new(FigureKind::PhaseHeatmap, "corner modes", "lambda1", "lambda4");
    out.put("aniso_map.svg", &svg::phase_heatmap_svg(&fig, &d, |p| p.zecm_count as f64)?)
}

fn run_steady(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let h = hamiltonian(&cfg.lattice, &cfg.coupling)?;
    let field = solve_steady_state(&h, &cfg.pump_spec(), DissipationSpec { kappa: cfg.kappa })?;
    let es = diagonalize(&h)?;
    let cat = classify_modes(&es, &cfg.lattice, &cfg.classifier)?;
    let mut r = serde_json::Map::new();
    for s in NeighborhoodStrategy::ALL {
        let v = corner_r(&field, &cfg.lattice, s)?;
        let per: serde_json::Map<String, Value> = Corner::ALL.iter().map(|c| (c.name().to_string(), json!(v[c.index()]))).collect();
        r.insert(s.name().to_string(), Value::Object(per));
    }
    let top: Vec<Value> = top_sites(&field, 8)
        .into_iter()
        .map(|i| {
            let (x, y) = cfg.lattice.coords_of_index(i);
            json!({ "x": x, "y": y, "sspn": field.sspn[i] })
        })
        .collect();
    out.put("steady.csv", &output::sspn_csv(&field.sspn, &cfg.lattice)?)?;
    out.put(
        "steady.json",
        &json_document(
            "steady",
            json!({
                "coupling": cfg.coupling,
                "kappa": cfg.kappa,
                "detuning": cfg.detuning,
                "pump": cfg.pump.name(),
                "residual": field.residual,
                "zecm_count": count_zecm(&cat),
                "corner_hosts": cat.corner_hosts,
                "r": r,
                "top_sites": top,
            }),
        )?,
    )?;
    let fig = FigureSpec::new(FigureKind::LatticeHeatmap, "steady-state photon number", "x", "y");
    out.put("steady.svg", &svg::lattice_heatmap_svg(&fig, &sspn_map(&field, &cfg.lattice))?)
}

fn run_r_sweep(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let phis = cfg.phi_axis.values();
    let pts = r_vs_phi(&phis, &cfg.coupling, cfg.kappa, &cfg.lattice, cfg.neighborhood)?;
    let crossings: serde_json::Map<String, Value> = Corner::ALL
        .iter()
        .map(|c| {
            let ys: Vec<f64> = pts.iter().map(|p| p.r[c.index()]).collect();
            (c.name().to_string(), json!(threshold_crossings(&phis, &ys, cfg.r_threshold)))
        })
        .collect();
    out.put("r_sweep.csv", &output::r_csv(&pts))?;
    out.put(
        "r_sweep.json",
        &json_document(
            "r_sweep",
            json!({
                "gamma": cfg.coupling.gamma,
                "kappa": cfg.kappa,
                "neighborhood": cfg.neighborhood.name(),
                "threshold": cfg.r_threshold,
                "crossings": crossings,
                "reference_phi": [PI / 2.0, 1.5 * PI],
            }),
        )?,
    )?;
    let fig = FigureSpec::new(FigureKind::RCurve, &format!("concentration factor, kappa = {}", cfg.kappa), "phi", "R");
    out.put("r_sweep.svg", &svg::r_curve_svg(&fig, &pts, Corner::BottomLeft.index(), cfg.r_threshold)?)
}

fn run_device_plan(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let freq = assign_frequencies(&cfg.lattice, cfg.omega0_ghz, cfg.delta_ghz)?;
    let links = enumerate_links(&cfg.lattice, &cfg.coupling)?;
    let plan = tone_plan(&links, &freq, cfg.scale_mhz)?;
    let report = validate_plan(&plan, &freq, cfg.guard_mhz)?;
    out.put("device_plan.csv", &output::tone_csv(&plan, &freq)?)?;
    out.put(
        "device_plan.json",
        &json_document(
            "device_plan",
            json!({
                "omega0_ghz": cfg.omega0_ghz,
                "delta_ghz": cfg.delta_ghz,
                "scale_mhz": cfg.scale_mhz,
                "guard_mhz": cfg.guard_mhz,
                "tone_set_ghz": plan.tone_set(),
                "tones": plan.tones.len(),
                "ok": report.ok(),
                "violations": report.violations,
            }),
        )?,
    )
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let common = match &cli.command {
        Command::Butterfly(c)
        | Command::PhaseMap(c)
        | Command::AnisoMap(c)
        | Command::Steady(c)
        | Command::RSweep(c)
        | Command::DevicePlan(c) => c.clone(),
    };
    let Loaded { cfg, explicit } = load(&common)?;
    let mut out = Emitter::new(&cfg.out_dir);
    match cli.command {
        Command::Butterfly(_) => run_butterfly(&cfg, &mut out)?,
        Command::PhaseMap(_) => run_phase_map(&cfg, &mut out)?,
        Command::AnisoMap(_) => run_aniso_map(&cfg, &explicit, &mut out)?,
        Command::Steady(_) => run_steady(&cfg, &mut out)?,
        Command::RSweep(_) => run_r_sweep(&cfg, &mut out)?,
        Command::DevicePlan(_) => run_device_plan(&cfg, &mut out)?,
    }
    Ok(out.written)
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match run(cli) {
        Ok(files) => {
            println!("{}", json!({ "files": files }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
