//! Experiment configuration: a flat `key = value` format with `[section]`
//! headers, comma-separated lists and `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use wpl_core::diagnostics::{LevelInterval, DEFAULT_R_PROBE, DEFAULT_THETA_BAR};
use wpl_core::energy::PenaltyConfig;
use wpl_core::flow::FlowParams;
use wpl_core::error::GridError;
use wpl_core::grid::{Boundary, Field, Grid, Point, DEFAULT_CELLS_PER_EPS};
use wpl_core::shapes::{BumpSpec, Orientation, ProfileKind, RadiusSchedule, Shape, SphereInsertSpec};
use wpl_core::topo::TopoConfig;

use crate::CliError;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// Parsed but untyped configuration.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, Section>,
}

fn err(line: usize, key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { line, key: key.to_string(), msg: msg.into() }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        let mut current: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(line, body, "unterminated section header"))?.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(line, body, "invalid section name"));
                }
                if cfg.sections.contains_key(name) {
                    return Err(err(line, name, "duplicate section"));
                }
                cfg.sections.insert(name.to_string(), Section { line, entries: BTreeMap::new() });
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| err(line, body, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(err(line, key, "invalid key"));
            }
            let section = current.as_ref().ok_or_else(|| err(line, key, "key outside any section"))?;
            let entries = &mut cfg.sections.get_mut(section).unwrap().entries;
            let full = format!("{section}.{key}");
            if entries.contains_key(key) {
                return Err(err(line, &full, "duplicate key"));
            }
            entries.insert(key.to_string(), Entry { value: value.trim().to_string(), line });
        }
        Ok(cfg)
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn section_names(&self, prefix: &str) -> Vec<String> {
        let p = format!("{prefix}.");
        self.sections.keys().filter(|k| k.starts_with(&p)).cloned().collect()
    }

    /// Fail on any key of `section` outside `allowed`.
    fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<(), CliError> {
        if let Some(s) = self.sections.get(section) {
            for (k, e) in &s.entries {
                if !allowed.contains(&k.as_str()) {
                    return Err(err(e.line, &format!("{section}.{k}"), "unknown key"));
                }
            }
        }
        Ok(())
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.entries.get(key))
    }

    fn section_line(&self, section: &str) -> usize {
        self.sections.get(section).map(|s| s.line).unwrap_or(0)
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry, CliError> {
        self.entry(section, key).ok_or_else(|| err(self.section_line(section), &format!("{section}.{key}"), "missing required key"))
    }

    fn parse_value<T: std::str::FromStr>(e: &Entry, section: &str, key: &str, what: &str) -> Result<T, CliError> {
        e.value.parse().map_err(|_| err(e.line, &format!("{section}.{key}"), format!("expected {what}, got `{}`", e.value)))
    }

    pub fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    pub fn f64_opt(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => {
                let v: f64 = Self::parse_value(e, section, key, "a number")?;
                if !v.is_finite() {
                    return Err(err(e.line, &format!("{section}.{key}"), "value must be finite"));
                }
                Ok(Some(v))
            }
        }
    }

    pub fn f64_req(&self, section: &str, key: &str) -> Result<f64, CliError> {
        self.required(section, key)?;
        Ok(self.f64_opt(section, key)?.unwrap())
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(section, key)?.unwrap_or(default))
    }

    pub fn usize_opt(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        self.entry(section, key).map(|e| Self::parse_value(e, section, key, "a non-negative integer")).transpose()
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.usize_opt(section, key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, CliError> {
        match self.entry(section, key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                v => Err(err(e.line, &format!("{section}.{key}"), format!("expected true or false, got `{v}`"))),
            },
        }
    }

    pub fn list_f64_opt(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        let full = format!("{section}.{key}");
        e.value
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(e.line, &full, format!("expected a list of numbers, got `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn list_f64_req(&self, section: &str, key: &str) -> Result<Vec<f64>, CliError> {
        self.required(section, key)?;
        Ok(self.list_f64_opt(section, key)?.unwrap())
    }

    pub fn list_str(&self, section: &str, key: &str) -> Vec<String> {
        self.str(section, key).map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()).unwrap_or_default()
    }

    fn point(&self, section: &str, key: &str, ndim: usize) -> Result<Point, CliError> {
        let v = self.list_f64_req(section, key)?;
        let e = self.entry(section, key).unwrap();
        if v.len() != ndim {
            return Err(err(e.line, &format!("{section}.{key}"), format!("expected {ndim} coordinates, got {}", v.len())));
        }
        let mut p = [0.0; 3];
        p[..ndim].copy_from_slice(&v);
        Ok(p)
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.entry(section, key).map(|e| e.line).unwrap_or_else(|| self.section_line(section))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sweep,
    Gradcheck,
    ETheta,
    Topo,
    Suite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub ndim: usize,
    pub shape: Option<Vec<usize>>,
    pub h: Option<f64>,
    pub extent: Option<Vec<f64>>,
    pub cells_per_eps: Option<f64>,
    pub origin: Vec<f64>,
    pub bc: Boundary,
    /// Minimum cells per eps accepted by the resolution contract.
    pub resolution: f64,
}

impl GridSpec {
    pub fn grid_for(&self, eps: f64) -> Result<Grid, GridError> {
        let (shape, h) = match (&self.shape, self.h, &self.extent, self.cells_per_eps) {
            (Some(s), Some(h), _, _) => (s.clone(), h),
            (_, _, Some(ext), Some(c)) => {
                let h = eps / c;
                (ext.iter().map(|e| (e / h).round() as usize).collect(), h)
            }
            _ => unreachable!("validated at parse time"),
        };
        Grid::new(&shape, h, &self.origin, self.bc)
    }

    /// A field on the grid for `eps`, checked against the resolution contract.
    pub fn field(&self, eps: f64, values: Vec<f64>) -> Result<Field, GridError> {
        Field::with_resolution(self.grid_for(eps)?, eps, values, self.resolution)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub profile: ProfileKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiBump {
    pub count: usize,
    pub template: Option<BumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Perturbation {
    pub bumps: Vec<BumpSpec>,
    pub multi: MultiBump,
    pub insert: Option<SphereInsertSpec>,
}

impl Perturbation {
    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty() && self.multi.count == 0 && self.insert.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub max_steps: usize,
    pub grad_tol: f64,
    pub dt: Option<f64>,
    pub dt_min: Option<f64>,
    pub armijo_c: f64,
    pub record_every: usize,
}

impl FlowSpec {
    pub fn params(&self, f: &Field, p: &PenaltyConfig) -> FlowParams {
        let mut fp = FlowParams::for_field(f, p, self.max_steps, self.grad_tol);
        if let Some(dt) = self.dt {
            fp.dt0 = dt;
            fp.dt_max = dt;
            fp.dt_min = dt * 1e-6;
        }
        if let Some(m) = self.dt_min {
            fp.dt_min = m;
        }
        fp.armijo_c = self.armijo_c;
        fp.record_every = self.record_every;
        fp
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsSpec {
    pub levelset: Option<LevelInterval>,
    pub holder_samples: Option<usize>,
    pub monotonicity_samples: Option<usize>,
    pub band: Option<(Point, f64, f64)>,
    pub ball_radius: Option<f64>,
    pub sup_ball: Option<(Point, f64)>,
    pub atoms: bool,
    pub theta_bar: f64,
    pub r_probe: f64,
    pub distant_tau: Option<f64>,
    pub diameter: bool,
    pub interface_measure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSpec {
    pub fields: usize,
    pub cells: usize,
    pub step: f64,
    pub directions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EThetaSpec {
    pub thetas: Vec<f64>,
    pub max_steps: usize,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub configs: Vec<PathBuf>,
    pub hausdorff_triples: usize,
    pub holder_from: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub eps_list: Vec<f64>,
    pub snapshots: bool,
    pub grid: Option<GridSpec>,
    pub shape: Option<ShapeSpec>,
    /// Named alternative shapes (`[shape.<name>]`), used by topo comparisons.
    pub cases: Vec<(String, ShapeSpec)>,
    pub perturbation: Perturbation,
    pub penalty: PenaltyConfig,
    pub flow: Option<FlowSpec>,
    pub diagnostics: DiagnosticsSpec,
    pub topo: Option<TopoConfig>,
    pub gradcheck: Option<GradcheckSpec>,
    pub etheta: Option<EThetaSpec>,
    pub suite: Option<SuiteSpec>,
    pub slopes: Vec<String>,
}

fn parse_bc(raw: &RawConfig, section: &str) -> Result<Boundary, CliError> {
    match raw.str(section, "bc").unwrap_or("N") {
        "P" | "periodic" => Ok(Boundary::Periodic),
        "N" | "neumann" => Ok(Boundary::NeumannReflect),
        "D" | "dirichlet" => Ok(Boundary::DirichletMinusOne),
        v => Err(err(raw.line_of(section, "bc"), &format!("{section}.bc"), format!("expected P, N or D, got `{v}`"))),
    }
}

fn parse_grid(raw: &RawConfig) -> Result<GridSpec, CliError> {
    let s = "grid";
    raw.check_keys(s, &["ndim", "shape", "h", "extent", "cells_per_eps", "origin", "bc", "resolution"])?;
    let ndim = raw.usize_opt(s, "ndim")?.ok_or_else(|| err(raw.section_line(s), "grid.ndim", "missing required key"))?;
    if ndim != 2 && ndim != 3 {
        return Err(err(raw.line_of(s, "ndim"), "grid.ndim", format!("must be 2 or 3, got {ndim}")));
    }
    let shape = raw
        .list_f64_opt(s, "shape")?
        .map(|v| {
            if v.len() != ndim || v.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
                return Err(err(raw.line_of(s, "shape"), "grid.shape", format!("expected {ndim} positive integers")));
            }
            Ok(v.iter().map(|x| *x as usize).collect::<Vec<_>>())
        })
        .transpose()?;
    let extent = raw.list_f64_opt(s, "extent")?;
    if let Some(e) = &extent {
        if e.len() != ndim || e.iter().any(|x| *x <= 0.0) {
            return Err(err(raw.line_of(s, "extent"), "grid.extent", format!("expected {ndim} positive lengths")));
        }
    }
    let h = raw.f64_opt(s, "h")?;
    let cells_per_eps = raw.f64_opt(s, "cells_per_eps")?;
    match (&shape, h, &extent, cells_per_eps) {
        (Some(_), Some(_), None, None) | (None, None, Some(_), Some(_)) => {}
        _ => return Err(err(raw.section_line(s), "grid", "give either `shape` and `h`, or `extent` and `cells_per_eps`")),
    }
    let origin = raw.list_f64_opt(s, "origin")?.unwrap_or_else(|| vec![0.0; ndim]);
    if origin.len() != ndim {
        return Err(err(raw.line_of(s, "origin"), "grid.origin", format!("expected {ndim} coordinates")));
    }
    let resolution = raw.f64_or(s, "resolution", DEFAULT_CELLS_PER_EPS)?;
    if !(resolution >= 1.0) {
        return Err(err(raw.line_of(s, "resolution"), "grid.resolution", "must be at least 1 cell per eps"));
    }
    Ok(GridSpec { ndim, shape, h, extent, cells_per_eps, origin, bc: parse_bc(raw, s)?, resolution })
}

fn parse_shape(raw: &RawConfig, s: &str, ndim: usize) -> Result<ShapeSpec, CliError> {
    raw.check_keys(s, &["kind", "center", "radius", "centers", "radii", "axis", "position", "inside", "profile"])?;
    let kind = raw.str(s, "kind").ok_or_else(|| err(raw.section_line(s), &format!("{s}.kind"), "missing required key"))?;
    let shape = match kind {
        "sphere" => Shape::sphere(raw.point(s, "center", 3)?, raw.f64_req(s, "radius")?),
        "circle" => {
            let c = raw.point(s, "center", 2)?;
            Shape::circle([c[0], c[1]], raw.f64_req(s, "radius")?)
        }
        "union" => {
            let c = raw.list_f64_req(s, "centers")?;
            let r = raw.list_f64_req(s, "radii")?;
            if c.len() != 3 * r.len() {
                return Err(err(raw.line_of(s, "centers"), &format!("{s}.centers"), "need three coordinates per radius"));
            }
            Shape::union(c.chunks(3).zip(&r).map(|(p, r)| ([p[0], p[1], p[2]], *r)).collect())
        }
        "slab" => {
            let axis = raw.usize_opt(s, "axis")?.ok_or_else(|| err(raw.section_line(s), &format!("{s}.axis"), "missing required key"))?;
            if axis >= ndim {
                return Err(err(raw.line_of(s, "axis"), &format!("{s}.axis"), format!("axis must be below {ndim}")));
            }
            Shape::slab(axis, raw.f64_req(s, "position")?)
        }
        v => return Err(err(raw.line_of(s, "kind"), &format!("{s}.kind"), format!("unknown shape `{v}`"))),
    };
    let orientation = match raw.str(s, "inside").unwrap_or("+1") {
        "+1" | "1" | "plus" => Orientation::InsidePlus,
        "-1" | "minus" => Orientation::InsideMinus,
        v => return Err(err(raw.line_of(s, "inside"), &format!("{s}.inside"), format!("expected +1 or -1, got `{v}`"))),
    };
    let profile = match raw.str(s, "profile").unwrap_or("cutoff") {
        "cutoff" => ProfileKind::CutOff,
        "exact" => ProfileKind::Exact,
        v => return Err(err(raw.line_of(s, "profile"), &format!("{s}.profile"), format!("expected cutoff or exact, got `{v}`"))),
    };
    Ok(ShapeSpec { shape: shape.oriented(orientation), profile })
}

fn parse_bump(raw: &RawConfig, s: &str, ndim: usize, need_x0: bool) -> Result<BumpSpec, CliError> {
    raw.check_keys(s, &["x0", "beta", "gamma", "amplitude", "sign", "count"])?;
    let x0 = if need_x0 { raw.point(s, "x0", ndim)? } else { [0.0; 3] };
    let b = BumpSpec {
        x0,
        beta: raw.f64_req(s, "beta")?,
        gamma: raw.f64_or(s, "gamma", 1.0)?,
        amplitude: raw.f64_or(s, "amplitude", 1.0)?,
        sign: raw.f64_or(s, "sign", 1.0)?,
    };
    if b.beta < 0.0 || b.gamma < 0.0 {
        return Err(err(raw.line_of(s, "beta"), &format!("{s}.beta"), "beta and gamma must be >= 0"));
    }
    if b.sign != 1.0 && b.sign != -1.0 {
        return Err(err(raw.line_of(s, "sign"), &format!("{s}.sign"), "sign must be +1 or -1"));
    }
    Ok(b)
}

fn parse_penalty(raw: &RawConfig) -> Result<PenaltyConfig, CliError> {
    let s = "penalty";
    raw.check_keys(s, &["area_weight", "lambda", "target_area", "chi", "target_volume", "sigma", "kappa", "topo"])?;
    Ok(PenaltyConfig {
        area_weight: raw.f64_or(s, "area_weight", 0.0)?,
        lambda_area: raw.f64_or(s, "lambda", 0.0)?,
        target_area: raw.f64_or(s, "target_area", 0.0)?,
        chi_volume: raw.f64_or(s, "chi", 0.0)?,
        target_volume: raw.f64_or(s, "target_volume", 0.0)?,
        sigma: raw.f64_opt(s, "sigma")?,
        kappa: raw.f64_opt(s, "kappa")?,
        topo: None,
    })
}

fn parse_topo(raw: &RawConfig, seed: u64) -> Result<TopoConfig, CliError> {
    let s = "topo";
    raw.check_keys(s, &["phi_lo", "phi_hi", "samples", "sources", "seed", "cases"])?;
    let d = TopoConfig::default();
    Ok(TopoConfig {
        phi_lo: raw.f64_or(s, "phi_lo", d.phi_lo)?,
        phi_hi: raw.f64_or(s, "phi_hi", d.phi_hi)?,
        sample_count: raw.usize_or(s, "samples", d.sample_count)?,
        sources: raw.usize_or(s, "sources", d.sources)?,
        seed: raw.usize_opt(s, "seed")?.map(|v| v as u64).unwrap_or(seed),
    })
}

fn parse_diagnostics(raw: &RawConfig, ndim: usize) -> Result<DiagnosticsSpec, CliError> {
    let s = "diagnostics";
    raw.check_keys(
        s,
        &[
            "levelset",
            "holder",
            "monotonicity",
            "band_center",
            "band_radius",
            "band_tau",
            "ball_radius",
            "sup_center",
            "sup_radius",
            "atoms",
            "theta_bar",
            "r_probe",
            "distant_tau",
            "diameter",
            "interface_measure",
        ],
    )?;
    let levelset = raw
        .list_f64_opt(s, "levelset")?
        .map(|v| {
            let line = raw.line_of(s, "levelset");
            if v.len() != 2 {
                return Err(err(line, "diagnostics.levelset", "expected `lo, hi`"));
            }
            LevelInterval::new(v[0], v[1]).map_err(|e| err(line, "diagnostics.levelset", e.to_string()))
        })
        .transpose()?;
    let band = if raw.entry(s, "band_center").is_some() {
        Some((raw.point(s, "band_center", ndim)?, raw.f64_req(s, "band_radius")?, raw.f64_req(s, "band_tau")?))
    } else {
        None
    };
    let sup_ball = if raw.entry(s, "sup_center").is_some() { Some((raw.point(s, "sup_center", ndim)?, raw.f64_req(s, "sup_radius")?)) } else { None };
    let spec = DiagnosticsSpec {
        levelset,
        holder_samples: raw.usize_opt(s, "holder")?,
        monotonicity_samples: raw.usize_opt(s, "monotonicity")?,
        band,
        ball_radius: raw.f64_opt(s, "ball_radius")?,
        sup_ball,
        atoms: raw.bool_or(s, "atoms", false)?,
        theta_bar: raw.f64_or(s, "theta_bar", DEFAULT_THETA_BAR)?,
        r_probe: raw.f64_or(s, "r_probe", DEFAULT_R_PROBE)?,
        distant_tau: raw.f64_opt(s, "distant_tau")?,
        diameter: raw.bool_or(s, "diameter", false)?,
        interface_measure: raw.f64_opt(s, "interface_measure")?,
    };
    for (key, v) in [("theta_bar", spec.theta_bar), ("r_probe", spec.r_probe)] {
        if v <= 0.0 {
            return Err(err(raw.line_of(s, key), &format!("{s}.{key}"), "must be positive"));
        }
    }
    if let Some(t) = spec.distant_tau {
        if t <= 0.0 {
            return Err(err(raw.line_of(s, "distant_tau"), "diagnostics.distant_tau", "must be positive"));
        }
    }
    Ok(spec)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "experiment".into());
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &name, base)
    }

    /// Parse and validate. Relative paths in the config resolve against `base`.
    pub fn parse(text: &str, name: &str, base: &Path) -> Result<Self, CliError> {
        let raw = RawConfig::parse(text)?;
        let known = ["experiment", "grid", "shape", "insert", "multibump", "penalty", "flow", "diagnostics", "topo", "gradcheck", "etheta", "suite", "report"];
        for (sec, data) in &raw.sections {
            let head = sec.split('.').next().unwrap();
            let dotted_ok = matches!(head, "shape" | "bump");
            if !(known.contains(&sec.as_str()) || (dotted_ok && sec.contains('.'))) {
                return Err(err(data.line, sec, "unknown section"));
            }
        }
        let s = "experiment";
        raw.check_keys(s, &["kind", "seed", "output_dir", "eps", "snapshots"])?;
        let kind = match raw.str(s, "kind").unwrap_or("sweep") {
            "sweep" => ExperimentKind::Sweep,
            "gradcheck" => ExperimentKind::Gradcheck,
            "etheta" => ExperimentKind::ETheta,
            "topo" => ExperimentKind::Topo,
            "suite" => ExperimentKind::Suite,
            v => return Err(err(raw.line_of(s, "kind"), "experiment.kind", format!("unknown kind `{v}`"))),
        };
        let seed = raw.usize_or(s, "seed", 0)? as u64;
        let output_dir = raw.str(s, "output_dir").map(PathBuf::from);
        let needs_eps = matches!(kind, ExperimentKind::Sweep | ExperimentKind::ETheta | ExperimentKind::Topo);
        let eps_list = if needs_eps { raw.list_f64_req(s, "eps")? } else { raw.list_f64_opt(s, "eps")?.unwrap_or_default() };
        if eps_list.iter().any(|e| *e <= 0.0) {
            return Err(err(raw.line_of(s, "eps"), "experiment.eps", "eps values must be positive"));
        }
        let snapshots = raw.bool_or(s, "snapshots", true)?;

        let grid = if matches!(kind, ExperimentKind::Sweep | ExperimentKind::Topo) { Some(parse_grid(&raw)?) } else { None };
        let ndim = grid.as_ref().map(|g| g.ndim).unwrap_or(3);
        let shape = if raw.has("shape") { Some(parse_shape(&raw, "shape", ndim)?) } else { None };
        let cases = raw
            .section_names("shape")
            .into_iter()
            .map(|sec| Ok((sec["shape.".len()..].to_string(), parse_shape(&raw, &sec, ndim)?)))
            .collect::<Result<Vec<_>, CliError>>()?;

        let mut perturbation = Perturbation::default();
        for sec in raw.section_names("bump") {
            perturbation.bumps.push(parse_bump(&raw, &sec, ndim, true)?);
        }
        if raw.has("multibump") {
            let count = raw.usize_opt("multibump", "count")?.ok_or_else(|| err(raw.section_line("multibump"), "multibump.count", "missing required key"))?;
            perturbation.multi = MultiBump { count, template: Some(parse_bump(&raw, "multibump", ndim, false)?) };
        }
        if raw.has("insert") {
            let s = "insert";
            raw.check_keys(s, &["x0", "r", "r_eps", "r_eps_coef", "r_eps_exponent"])?;
            let r_eps = match (raw.f64_opt(s, "r_eps")?, raw.f64_opt(s, "r_eps_coef")?, raw.f64_opt(s, "r_eps_exponent")?) {
                (Some(r), None, None) => RadiusSchedule::Fixed(r),
                (None, Some(coef), Some(exponent)) => RadiusSchedule::Power { coef, exponent },
                _ => return Err(err(raw.section_line(s), "insert.r_eps", "give either `r_eps` or `r_eps_coef` and `r_eps_exponent`")),
            };
            perturbation.insert = Some(SphereInsertSpec { x0: raw.point(s, "x0", ndim)?, r: raw.f64_req(s, "r")?, r_eps });
        }

        let mut penalty = parse_penalty(&raw)?;
        let topo = if raw.has("topo") { Some(parse_topo(&raw, seed)?) } else { None };
        if raw.bool_or("penalty", "topo", false)? {
            penalty.topo = Some(topo.clone().unwrap_or(TopoConfig { seed, ..TopoConfig::default() }));
        }
        penalty.validate().map_err(|e| err(raw.section_line("penalty"), "penalty", e.to_string()))?;
        if let Some(t) = &topo {
            t.validate().map_err(|e| err(raw.section_line("topo"), "topo", e.to_string()))?;
        }

        let flow = if raw.has("flow") {
            let s = "flow";
            raw.check_keys(s, &["max_steps", "grad_tol", "dt", "dt_min", "armijo_c", "record_every"])?;
            let spec = FlowSpec {
                max_steps: raw.usize_or(s, "max_steps", 1000)?,
                grad_tol: raw.f64_or(s, "grad_tol", 1e-3)?,
                dt: raw.f64_opt(s, "dt")?,
                dt_min: raw.f64_opt(s, "dt_min")?,
                armijo_c: raw.f64_or(s, "armijo_c", 1e-4)?,
                record_every: raw.usize_or(s, "record_every", 10)?,
            };
            let probe = FlowParams {
                max_steps: spec.max_steps,
                dt0: 1.0,
                dt_min: 0.5,
                dt_max: 1.0,
                armijo_c: spec.armijo_c,
                grad_tol: spec.grad_tol,
                record_every: spec.record_every,
            };
            probe.validate().map_err(|e| err(raw.section_line(s), "flow", e.to_string()))?;
            if let (Some(dt), Some(m)) = (spec.dt, spec.dt_min) {
                if !(m > 0.0 && m <= dt) {
                    return Err(err(raw.line_of(s, "dt_min"), "flow.dt_min", "need 0 < dt_min <= dt"));
                }
            }
            Some(spec)
        } else {
            None
        };
        let diagnostics = parse_diagnostics(&raw, ndim)?;

        let gradcheck = if kind == ExperimentKind::Gradcheck {
            let s = "gradcheck";
            raw.check_keys(s, &["fields", "cells", "step", "directions"])?;
            let g = GradcheckSpec {
                fields: raw.usize_or(s, "fields", 10)?,
                cells: raw.usize_or(s, "cells", 16)?,
                step: raw.f64_or(s, "step", 1e-6)?,
                directions: raw.usize_or(s, "directions", 1)?,
            };
            if g.cells < 8 || g.fields == 0 || g.directions == 0 || g.step <= 0.0 {
                return Err(err(raw.section_line(s), "gradcheck", "need cells >= 8, fields >= 1, directions >= 1, step > 0"));
            }
            Some(g)
        } else {
            None
        };
        let etheta = if kind == ExperimentKind::ETheta {
            let s = "etheta";
            raw.check_keys(s, &["thetas", "max_steps", "grad_tol"])?;
            let thetas = raw.list_f64_req(s, "thetas")?;
            if thetas.iter().any(|t| !(0.0..1.0).contains(t)) {
                return Err(err(raw.line_of(s, "thetas"), "etheta.thetas", "theta must lie in [0, 1)"));
            }
            Some(EThetaSpec { thetas, max_steps: raw.usize_or(s, "max_steps", 2000)?, grad_tol: raw.f64_or(s, "grad_tol", 1e-3)? })
        } else {
            None
        };
        let suite = if kind == ExperimentKind::Suite {
            let s = "suite";
            raw.check_keys(s, &["configs", "hausdorff_triples", "holder_from"])?;
            let configs: Vec<PathBuf> = raw.list_str(s, "configs").into_iter().map(|c| base.join(c)).collect();
            if configs.is_empty() {
                return Err(err(raw.section_line(s), "suite.configs", "list at least one config"));
            }
            Some(SuiteSpec {
                configs,
                hausdorff_triples: raw.usize_or(s, "hausdorff_triples", 100)?,
                holder_from: raw.str(s, "holder_from").map(|p| base.join(p)),
            })
        } else {
            None
        };
        raw.check_keys("report", &["slopes"])?;
        let slopes = raw.list_str("report", "slopes");

        let cfg = ExperimentConfig {
            name: name.to_string(),
            kind,
            seed,
            output_dir,
            eps_list,
            snapshots,
            grid,
            shape,
            cases,
            perturbation,
            penalty,
            flow,
            diagnostics,
            topo,
            gradcheck,
            etheta,
            suite,
            slopes,
        };
        cfg.validate(&raw)?;
        Ok(cfg)
    }

    /// Geometric checks that need the grid of every eps.
    fn validate(&self, raw: &RawConfig) -> Result<(), CliError> {
        match self.kind {
            ExperimentKind::Sweep => {
                if self.shape.is_none() {
                    return Err(err(0, "shape", "sweep experiments need a [shape] section"));
                }
            }
            ExperimentKind::Topo => {
                if self.topo.is_none() {
                    return Err(err(0, "topo", "topo experiments need a [topo] section"));
                }
                if self.cases.is_empty() && self.shape.is_none() {
                    return Err(err(0, "shape", "topo experiments need [shape] or [shape.<name>] sections"));
                }
            }
            _ => return Ok(()),
        }
        let grid_spec = self.grid.as_ref().unwrap();
        for &eps in &self.eps_list {
            let grid = grid_spec.grid_for(eps).map_err(|e| err(raw.section_line("grid"), "grid", format!("eps = {eps}: {e}")))?;
            Field::with_resolution(grid.clone(), eps, vec![0.0; grid.len()], grid_spec.resolution)
                .map_err(|e| err(raw.section_line("grid"), "grid", format!("eps = {eps}: {e}")))?;
            let shapes = self.shape.iter().map(|s| ("shape".to_string(), s)).chain(self.cases.iter().map(|(n, s)| (format!("shape.{n}"), s)));
            for (sec, s) in shapes {
                s.shape.validate(&grid, eps).map_err(|e| err(raw.section_line(&sec), &sec, format!("eps = {eps}: {e}")))?;
            }
            if let Some(shape) = &self.shape {
                for (k, b) in self.perturbation.bumps.iter().enumerate() {
                    let sec = raw.section_names("bump").get(k).cloned().unwrap_or_default();
                    b.validate(&grid, eps, &shape.shape).map_err(|e| err(raw.section_line(&sec), &sec, format!("eps = {eps}: {e}")))?;
                }
            }
            if let Some(ins) = &self.perturbation.insert {
                ins.check_schedule(eps).map_err(|e| err(raw.section_line("insert"), "insert", e.to_string()))?;
                if !grid.contains_ball(&ins.x0, ins.r) {
                    return Err(err(raw.section_line("insert"), "insert", format!("B_{}({:?}) leaves the domain", ins.r, ins.x0)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = "
[experiment]
eps = 0.08, 0.04   # two values
[grid]
ndim = 2
shape = 128, 128
h = 0.0078125
bc = N
[shape]
kind = circle
center = 0.5, 0.5
radius = 0.3
";

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::parse(CIRCLE, "c", Path::new(".")).unwrap();
        assert_eq!(c.kind, ExperimentKind::Sweep);
        assert_eq!(c.eps_list, vec![0.08, 0.04]);
        let g = c.grid.unwrap().grid_for(0.04).unwrap();
        assert_eq!(g.shape(), &[128, 128]);
    }

    #[test]
    fn malformed_key_is_named() {
        let text = CIRCLE.replace("radius = 0.3", "radius = 0.3\nradus = 2");
        match ExperimentConfig::parse(&text, "c", Path::new(".")) {
            Err(CliError::Config { key, line, .. }) => {
                assert_eq!(key, "shape.radus");
                assert_eq!(line, 13);
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = CIRCLE.replace("radius = 0.3", "radius = abc");
        assert!(matches!(ExperimentConfig::parse(&text, "c", Path::new(".")), Err(CliError::Config { key, .. }) if key == "shape.radius"));
    }

    #[test]
    fn geometry_is_validated_up_front() {
        let text = CIRCLE.replace("radius = 0.3", "radius = 0.45");
        assert!(matches!(ExperimentConfig::parse(&text, "c", Path::new(".")), Err(CliError::Config { key, .. }) if key == "shape"));
        let text = CIRCLE.replace("0.08, 0.04", "0.08, 0.04, 0.03");
        assert!(ExperimentConfig::parse(&text, "c", Path::new(".")).is_err());
    }

    #[test]
    fn extent_grid_scales_with_eps() {
        let text = CIRCLE.replace("shape = 128, 128\nh = 0.0078125", "extent = 1, 1\ncells_per_eps = 6");
        let c = ExperimentConfig::parse(&text, "c", Path::new(".")).unwrap();
        let g = c.grid.unwrap();
        assert_eq!(g.grid_for(0.04).unwrap().shape(), &[150, 150]);
        assert_eq!(g.grid_for(0.08).unwrap().shape(), &[75, 75]);
    }
}
