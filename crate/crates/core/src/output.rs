//! Deterministic result files: long-format CSV and schema-versioned JSON.
//!
//! All floats are rounded to 12 significant digits before printing.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::device_map::{FrequencyPlan, ModulationPlan};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::phase_scan::{ButterflySlice, PhaseDiagram};
use crate::steady_state::RPoint;

pub const SCHEMA_VERSION: u32 = 1;

/// Round to 12 significant digits. Negative zero becomes zero.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{}", round12(x))
}

/// Recursively round every float in a JSON value. Non-finite numbers become null.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(round12).and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub enum Field<'a> {
    F(f64),
    U(usize),
    S(&'a str),
}

/// CSV with a fixed header and rows appended in call order.
pub struct Csv {
    width: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { width: header.len(), text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, fields: &[Field<'_>]) {
        assert_eq!(fields.len(), self.width, "row width");
        let cells: Vec<String> = fields
            .iter()
            .map(|f| match f {
                Field::F(x) => fmt12(*x),
                Field::U(u) => u.to_string(),
                Field::S(s) => (*s).to_string(),
            })
            .collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn rows(&self) -> usize {
        self.text.lines().count() - 1
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// JSON document `{ "schema_version", "kind", ...payload }`, keys sorted.
pub fn json_document(kind: &str, payload: Value) -> Result<String> {
    let mut obj = Map::new();
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("kind".into(), json!(kind));
    match payload {
        Value::Object(o) => obj.extend(o),
        Value::Null => {}
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&round_json(Value::Object(obj))).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

/// Columns `phi, energy, class`: one row per eigenvalue per slice.
pub fn butterfly_csv(slices: &[ButterflySlice]) -> String {
    let mut c = Csv::new(&["phi", "energy", "class"]);
    for s in slices {
        for (e, cl) in s.energies.iter().zip(&s.classes) {
            c.row(&[Field::F(s.phi), Field::F(*e), Field::S(cl.name())]);
        }
    }
    c.finish()
}

pub fn phase_csv(d: &PhaseDiagram) -> String {
    let a1 = d.grid.axis1.name.as_str();
    let a2 = d.grid.axis2.name.as_str();
    let mut c = Csv::new(&[a1, a2, "zecm_count", "zero_gap", "edge_bandwidth", "bottom_left", "top_left", "bottom_right", "top_right"]);
    for p in &d.points {
        c.row(&[
            Field::F(p.p1),
            Field::F(p.p2),
            Field::U(p.zecm_count),
            Field::F(p.zero_gap),
            Field::F(p.edge_bandwidth),
            Field::U(p.corner_hosts[0]),
            Field::U(p.corner_hosts[1]),
            Field::U(p.corner_hosts[2]),
            Field::U(p.corner_hosts[3]),
        ]);
    }
    c.finish()
}

/// Columns `phi, corner, r`.
pub fn r_csv(points: &[RPoint]) -> String {
    let mut c = Csv::new(&["phi", "corner", "r"]);
    for p in points {
        for corner in crate::lattice::Corner::ALL {
            c.row(&[Field::F(p.phi), Field::S(corner.name()), Field::F(p.r[corner.index()])]);
        }
    }
    c.finish()
}

/// Columns `x, y, cell_x, cell_y, sublattice, sspn`, in site-index order.
pub fn sspn_csv(sspn: &[f64], spec: &LatticeSpec) -> Result<String> {
    let mut c = Csv::new(&["x", "y", "cell_x", "cell_y", "sublattice", "sspn"]);
    for (i, n) in sspn.iter().enumerate() {
        let s = spec.site(i)?;
        let (x, y) = spec.coords(s);
        let sub = s.sublattice.to_string();
        c.row(&[Field::U(x), Field::U(y), Field::U(s.cell_x), Field::U(s.cell_y), Field::S(&sub), Field::F(*n)]);
    }
    Ok(c.finish())
}

/// Columns `from, to, from_ghz, to_ghz, tone_ghz, amplitude_mhz, phase, coupler`.
pub fn tone_csv(plan: &ModulationPlan, freq: &FrequencyPlan) -> Result<String> {
    let mut c = Csv::new(&["from", "to", "from_ghz", "to_ghz", "tone_ghz", "amplitude_mhz", "phase", "coupler"]);
    for t in &plan.tones {
        let (from, to, coupler) = (t.from.to_string(), t.to.to_string(), t.coupler.to_string());
        c.row(&[
            Field::S(&from),
            Field::S(&to),
            Field::F(freq.frequency(t.from)?),
            Field::F(freq.frequency(t.to)?),
            Field::F(t.tone_ghz),
            Field::F(t.amplitude_mhz),
            Field::F(t.phase),
            Field::S(&coupler),
        ]);
    }
    Ok(c.finish())
}
