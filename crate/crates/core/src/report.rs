//! Structured solve reports (JSON) and field export (CSV).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryField, Chart, ScalarField};
use crate::weighted::DecayFit;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
}

impl Extrema {
    pub fn of(values: &[f64]) -> Self {
        Extrema {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Option<String>,
    pub message: String,
}

impl From<&Error> for Failure {
    fn from(e: &Error) -> Self {
        Failure {
            stage: e.stage().map(str::to_string),
            message: e.root().to_string(),
        }
    }
}

/// Diagnostics of one run. Maps are ordered so serialization is stable;
/// wall-clock data lives only under `timing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub mode: String,
    /// Named residual norms, e.g. `"R(g~) L(2,-2.5)"`.
    pub residuals: BTreeMap<String, f64>,
    pub decay_fits: BTreeMap<String, DecayFit>,
    /// Mass coefficient `m` in `1 + m / (2 r^(n-2))`.
    pub mass: Option<f64>,
    pub extrema: BTreeMap<String, Extrema>,
    pub iterations: BTreeMap<String, usize>,
    pub scalars: BTreeMap<String, f64>,
    pub history: BTreeMap<String, Vec<f64>>,
    pub checks: BTreeMap<String, bool>,
    pub failure: Option<Failure>,
    pub timing: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn new(mode: &str) -> Self {
        SolveReport {
            schema_version: SCHEMA_VERSION,
            mode: mode.to_string(),
            residuals: BTreeMap::new(),
            decay_fits: BTreeMap::new(),
            mass: None,
            extrema: BTreeMap::new(),
            iterations: BTreeMap::new(),
            scalars: BTreeMap::new(),
            history: BTreeMap::new(),
            checks: BTreeMap::new(),
            failure: None,
            timing: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.checks.values().all(|&c| c)
    }

    /// Non-finite values cannot be written as JSON numbers; they are
    /// dropped from the numeric maps and listed under `checks` instead.
    fn sanitized(&self) -> SolveReport {
        let mut out = self.clone();
        for (k, v) in self.residuals.iter().chain(&self.scalars).chain(&self.timing) {
            if !v.is_finite() {
                out.checks.insert(format!("finite:{k}"), false);
            }
        }
        out.residuals.retain(|_, v| v.is_finite());
        out.scalars.retain(|_, v| v.is_finite());
        out.timing.retain(|_, v| v.is_finite());
        if out.mass.is_some_and(|m| !m.is_finite()) {
            out.mass = None;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.sanitized()).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Io(format!("report: {e}")))
    }
}

/// Wall-clock timer for the `timing` map. There is no clock on
/// `wasm32-unknown-unknown`, where nothing is recorded.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn elapsed_s(&self) -> Option<f64> {
        #[cfg(not(target_arch = "wasm32"))]
        return Some(self.start.elapsed().as_secs_f64());
        #[cfg(target_arch = "wasm32")]
        None
    }

    /// Records the elapsed time as `wall_s`.
    pub fn record(&self, report: &mut SolveReport) {
        if let Some(t) = self.elapsed_s() {
            report.timing.insert("wall_s".into(), t);
        }
    }
}

/// Writes `report.json` into `dir`.
pub fn emit_report(report: &SolveReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    fs::write(&path, report.to_json()? + "\n")?;
    Ok(path)
}

/// Writes `fields.csv` with columns `i, j, s, r, theta` and one column per
/// named field; all fields must share a chart.
///
/// Floats are written with Rust's shortest round-trip formatting; `r` at
/// the node at infinity is written as `inf`.
pub fn emit_fields(fields: &[(&str, &ScalarField)], dir: &Path) -> Result<PathBuf> {
    emit_fields_named(fields, dir, "fields.csv")
}

pub fn emit_fields_named(fields: &[(&str, &ScalarField)], dir: &Path, file: &str) -> Result<PathBuf> {
    let Some((_, first)) = fields.first() else {
        return Err(Error::InvalidSpec("no fields to export".into()));
    };
    let chart = first.chart();
    for (name, f) in fields {
        if !crate::geometry::field::same_chart(chart, f.chart()) {
            return Err(Error::ChartMismatch);
        }
        if name.contains(',') || name.is_empty() {
            return Err(Error::InvalidSpec(format!("bad column name {name:?}")));
        }
    }
    fs::create_dir_all(dir)?;
    let path = dir.join(file);
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    write!(out, "i,j,s,r,theta")?;
    for (name, _) in fields {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for k in 0..chart.len() {
        let (i, j) = chart.split(k);
        let s = chart.s()[i];
        let r = if s == 0.0 { "inf".to_string() } else { (1.0 / s).to_string() };
        write!(out, "{i},{j},{s},{r},{}", chart.theta_at(j))?;
        for (_, f) in fields {
            write!(out, ",{}", f.values()[k])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(path)
}

/// Writes boundary fields as `j, theta, <names...>`.
pub fn emit_boundary_fields(fields: &[(&str, &BoundaryField)], dir: &Path, file: &str) -> Result<PathBuf> {
    let Some((_, first)) = fields.first() else {
        return Err(Error::InvalidSpec("no fields to export".into()));
    };
    let chart = first.chart().clone();
    fs::create_dir_all(dir)?;
    let path = dir.join(file);
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    write!(out, "j,theta")?;
    for (name, _) in fields {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for j in 0..chart.ntheta() {
        write!(out, "{j},{}", chart.theta_at(j))?;
        for (_, f) in fields {
            write!(out, ",{}", f.values()[j])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(path)
}

/// Reads a CSV written by [`emit_fields`] back onto `chart`.
pub fn read_fields(path: &Path, chart: &Arc<Chart>) -> Result<Vec<(String, ScalarField)>> {
    let file = BufReader::new(fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty CSV".into()))??;
    let names: Vec<String> = header.split(',').skip(5).map(str::to_string).collect();
    let mut columns = vec![vec![0.0; chart.len()]; names.len()];
    let mut seen = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() + 5 {
            return Err(Error::Io(format!("CSV line {}: expected {} cells", lineno + 2, names.len() + 5)));
        }
        let parse_idx = |t: &str| t.parse::<usize>().map_err(|_| Error::Io(format!("CSV line {}: bad index", lineno + 2)));
        let (i, j) = (parse_idx(cells[0])?, parse_idx(cells[1])?);
        if i >= chart.ns() || j >= chart.ntheta() {
            return Err(Error::Io(format!("CSV line {}: node outside chart", lineno + 2)));
        }
        let k = chart.index(i, j);
        for (c, col) in columns.iter_mut().enumerate() {
            col[k] = cells[c + 5]
                .parse()
                .map_err(|_| Error::Io(format!("CSV line {}: bad value", lineno + 2)))?;
        }
        seen += 1;
    }
    if seen != chart.len() {
        return Err(Error::SizeMismatch {
            expected: chart.len(),
            got: seen,
        });
    }
    names
        .into_iter()
        .zip(columns)
        .map(|(n, v)| Ok((n, ScalarField::new(chart.clone(), v)?)))
        .collect()
}

/// Reads per-node boundary data: one value per line, or `theta,value` pairs
/// (header lines starting with a letter are skipped).
pub fn read_boundary_csv(path: &Path, chart: &Arc<Chart>) -> Result<BoundaryField> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(|c: char| c.is_ascii_alphabetic() || c == '#') {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or(line).trim();
        values.push(
            last.parse::<f64>()
                .map_err(|_| Error::Config(format!("{}:{}: not a number: {last:?}", path.display(), k + 1)))?,
        );
    }
    BoundaryField::new(chart.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip() {
        let mut r = SolveReport::new("dirichlet");
        r.residuals.insert("x".into(), 1.0 / 3.0);
        r.scalars.insert("alpha".into(), 0.1 + 0.2);
        r.history.insert("h".into(), vec![1e-300, 2.5e10]);
        r.decay_fits.insert(
            "phi-1".into(),
            DecayFit::Decaying { u_inf: 0.0, a: 1.0000000000000002, q: 0.9999999999999998, residual: 1e-17 },
        );
        r.checks.insert("ok".into(), true);
        let back = SolveReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn non_finite_values_are_flagged() {
        let mut r = SolveReport::new("x");
        r.scalars.insert("bad".into(), f64::NAN);
        let back = SolveReport::from_json(&r.to_json().unwrap()).unwrap();
        assert!(!back.scalars.contains_key("bad"));
        assert_eq!(back.checks.get("finite:bad"), Some(&false));
    }

    #[test]
    fn csv_round_trip_and_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let c = Chart::axisymmetric(3, 11, 4).unwrap();
        let u = ScalarField::from_fn(c.clone(), |s, t| (s + 0.1).ln() * t.cos() / 3.0).unwrap();
        let path = emit_fields(&[("u", &u)], dir.path()).unwrap();
        let back = read_fields(&path, &c).unwrap();
        assert_eq!(back[0].0, "u");
        assert_eq!(back[0].1.values(), u.values());
        assert!(emit_fields(&[], dir.path()).is_err());
    }
}
