//! Sweep reports, log-log slope fits and the CSV/JSON writers.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use wpl_core::diagnostics::PointSet;
use wpl_core::energy::EnergyReport;
use wpl_core::flow::FlowTrace;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub eps: f64,
    #[serde(flatten)]
    pub energy: Option<EnergyReport>,
    #[serde(flatten)]
    pub values: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(eps: f64) -> Self {
        Self { eps, energy: None, values: BTreeMap::new() }
    }

    pub fn set(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    /// A column by name, from the energy report or the extra values.
    pub fn get(&self, key: &str) -> Option<f64> {
        if key == "eps" {
            return Some(self.eps);
        }
        if let Some(v) = self.values.get(key) {
            return Some(*v);
        }
        let e = serde_json::to_value(self.energy.as_ref()?).ok()?;
        e.get(key)?.as_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub column: String,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Least-squares line through `(ln x, ln |y|)` with a 95% confidence interval
/// on the slope. Needs at least 3 points.
pub fn fit_slope(column: &str, xs: &[f64], ys: &[f64]) -> Result<SlopeFit, CliError> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && y.abs() > 0.0 && y.is_finite()).map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    let n = pts.len();
    if n < 3 {
        return Err(CliError::Runtime(format!("slope of `{column}` needs at least 3 nonzero points, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0).map_err(|e| CliError::Runtime(e.to_string()))?.inverse_cdf(0.975);
    Ok(SlopeFit { column: column.to_string(), slope, intercept, stderr, ci_low: slope - t * stderr, ci_high: slope + t * stderr, points: n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsFailure {
    pub eps: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub kind: String,
    /// One row per eps, ordered by eps descending.
    pub rows: Vec<Row>,
    pub slopes: BTreeMap<String, SlopeFit>,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub failures: Vec<EpsFailure>,
    pub notes: Vec<String>,
}

impl SweepReport {
    pub fn new(name: &str, kind: &str) -> Self {
        Self { name: name.to_string(), kind: kind.to_string(), rows: vec![], slopes: BTreeMap::new(), summary: BTreeMap::new(), failures: vec![], notes: vec![] }
    }

    pub fn column(&self, key: &str) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(key).unwrap_or(f64::NAN)).collect()
    }

    pub fn row(&self, eps: f64) -> Option<&Row> {
        self.rows.iter().find(|r| r.eps == eps)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(|v| v.as_f64())
    }

    /// Fit each requested column against eps; failures become notes.
    pub fn fit_slopes(&mut self, columns: &[String]) {
        let eps: Vec<f64> = self.rows.iter().map(|r| r.eps).collect();
        for c in columns {
            match fit_slope(c, &eps, &self.column(c)) {
                Ok(fit) => {
                    self.slopes.insert(c.clone(), fit);
                }
                Err(e) => self.notes.push(e.to_string()),
            }
        }
    }

    fn columns(&self) -> Vec<String> {
        let mut cols = vec!["eps".to_string()];
        if let Some(e) = self.rows.iter().find_map(|r| r.energy.as_ref()) {
            if let Ok(serde_json::Value::Object(m)) = serde_json::to_value(e) {
                // Keep the declared field order of the energy report.
                let order = [
                    "S_eps", "W_eps", "total_mu", "total_alpha", "xi_plus_total", "xi_abs_total", "volume_term", "area_term", "penalty_area", "penalty_volume",
                    "penalty_topo", "tail", "total_E",
                ];
                cols.extend(order.iter().filter(|k| m.contains_key(**k)).map(|k| k.to_string()));
            }
        }
        let extra: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.values.keys()).collect();
        cols.extend(extra.into_iter().cloned());
        cols
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let cols = self.columns();
        w.write_record(&cols).map_err(io)?;
        for r in &self.rows {
            let rec: Vec<String> = cols.iter().map(|c| r.get(c).map(|v| v.to_string()).unwrap_or_default()).collect();
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<(), CliError> {
        let mut f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::to_writer_pretty(&mut f, self).map_err(|e| CliError::Io(e.to_string()))?;
        f.write_all(b"\n").map_err(|e| CliError::Io(e.to_string()))
    }

    /// `report.json` and `sweep.csv` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        self.write_json(&dir.join("report.json"))?;
        self.write_csv(&dir.join("sweep.csv"))
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// `step,total_E,S_eps,W_eps,grad_norm,dt`.
pub fn write_trace(path: &Path, trace: &FlowTrace) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in &trace.records {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Point sets as CSV with header `x,y` or `x,y,z`.
pub fn write_points(path: &Path, set: &PointSet, ndim: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&["x", "y", "z"][..ndim]).map_err(io)?;
    for p in &set.points {
        w.write_record(p[..ndim].iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_points(path: &Path) -> Result<PointSet, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let ndim = r.headers().map_err(io)?.len();
    if !(2..=3).contains(&ndim) {
        return Err(CliError::Input(format!("{}: expected header x,y or x,y,z", path.display())));
    }
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut p = [0.0; 3];
        for (a, field) in rec.iter().enumerate() {
            p[a] = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Input(format!("{}: row {}: bad coordinate `{field}`", path.display(), i + 2)))?;
        }
        points.push(p);
    }
    Ok(PointSet::new(path.display().to_string(), points))
}
