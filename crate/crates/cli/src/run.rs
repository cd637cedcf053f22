//! Experiment pipelines: eps sweeps, gradient checks, `e(theta)`, topological
//! comparisons and the aggregating suite.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wpl_core::diagnostics::{
    band_mass, detect_atoms, distant_set, extract_level_set, hausdorff, holder_probe, monotonicity_check, LevelInterval, PointSet,
};
use wpl_core::energy::{alpha_density, energy_report, first_variation, interior_mask, mu_density, PenaltyConfig};
use wpl_core::flow::{descend, estimate_e_theta, FlowError, FlowOutcome, FlowParams};
use wpl_core::grid::{write_snapshot, Boundary, Field, Grid, Point};
use wpl_core::shapes::{apply_bumps, insert_sphere, quasi_random_bumps, recovery_field_with, BumpSpec, Shape};
use wpl_core::topo::{topo_energy, Phase};

use crate::config::{ExperimentConfig, ExperimentKind, ShapeSpec};
use crate::report::{write_points, write_trace, EpsFailure, Row, SweepReport};
use crate::{diameter_check, CliError};

/// Interval whose level cloud stands in for the interface.
pub const ZERO_BAND: (f64, f64) = (-0.05, 0.05);

/// Runs configs and memoises their reports by canonical path.
#[derive(Default)]
pub struct Runner {
    out_root: Option<PathBuf>,
    write: bool,
    cache: Mutex<HashMap<PathBuf, Arc<SweepReport>>>,
}

impl Runner {
    /// Outputs go to `<out_root>/<config name>` when set, otherwise to the
    /// config's `output_dir` or `wpl-out/<config name>`.
    pub fn new(out_root: Option<PathBuf>) -> Self {
        Self { out_root, write: true, cache: Mutex::default() }
    }

    /// A runner that computes reports without touching the filesystem.
    pub fn in_memory() -> Self {
        Self { out_root: None, write: false, cache: Mutex::default() }
    }

    pub fn output_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        match (&self.out_root, &cfg.output_dir) {
            (Some(root), _) => root.join(&cfg.name),
            (None, Some(dir)) => dir.clone(),
            (None, None) => PathBuf::from("wpl-out").join(&cfg.name),
        }
    }

    pub fn run(&self, path: &Path) -> Result<Arc<SweepReport>, CliError> {
        let key = path.canonicalize().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if let Some(r) = self.cache.lock().unwrap().get(&key) {
            return Ok(r.clone());
        }
        let cfg = ExperimentConfig::load(&key)?;
        let report = Arc::new(self.run_config(&cfg)?);
        self.cache.lock().unwrap().insert(key, report.clone());
        Ok(report)
    }

    /// Execute a validated config and write its outputs.
    pub fn run_config(&self, cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
        let dir = if self.write {
            let d = self.output_dir(cfg);
            std::fs::create_dir_all(&d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
            Some(d)
        } else {
            None
        };
        let out = dir.as_deref();
        let mut report = match cfg.kind {
            ExperimentKind::Sweep => sweep(cfg, out)?,
            ExperimentKind::Gradcheck => gradcheck(cfg)?,
            ExperimentKind::ETheta => etheta(cfg)?,
            ExperimentKind::Topo => topo(cfg)?,
            ExperimentKind::Suite => self.suite(cfg)?,
        };
        report.fit_slopes(&cfg.slopes);
        if let Some(d) = out {
            report.write(d)?;
        }
        Ok(report)
    }

    fn suite(&self, cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
        let spec = cfg.suite.as_ref().unwrap();
        let mut report = SweepReport::new(&cfg.name, "suite");
        let (mut mono_checked, mut mono_failed, mut diam_checks, mut diam_failed) = (0.0, 0.0, 0.0, 0.0);
        let mut names = Vec::new();
        for path in &spec.configs {
            names.push(path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
            match self.run(path) {
                Ok(r) => {
                    for row in &r.rows {
                        mono_checked += row.get("mono_checked").unwrap_or(0.0);
                        mono_failed += row.get("mono_failed").unwrap_or(0.0);
                        if let Some(ok) = row.get("diam_ok") {
                            diam_checks += 1.0;
                            diam_failed += 1.0 - ok;
                        }
                    }
                    for f in &r.failures {
                        report.failures.push(EpsFailure { eps: f.eps, error: format!("{}: {}", r.name, f.error) });
                    }
                }
                Err(e) => report.failures.push(EpsFailure { eps: 0.0, error: format!("{}: {e}", path.display()) }),
            }
        }
        report.summary.insert("configs".into(), json!(names));
        report.summary.insert("mono_checked".into(), json!(mono_checked));
        report.summary.insert("mono_failed".into(), json!(mono_failed));
        report.summary.insert("diameter_checks".into(), json!(diam_checks));
        report.summary.insert("diameter_failed".into(), json!(diam_failed));
        if let Some(p) = &spec.holder_from {
            let r = self.run(p)?;
            let c: Vec<f64> = r.column("holder_C").into_iter().filter(|v| v.is_finite()).collect();
            let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
            report.summary.insert("holder_constants".into(), json!(c));
            report.summary.insert("holder_ratio".into(), json!(max / min));
        }
        let (triples, failures) = hausdorff_axioms(spec.hausdorff_triples, cfg.seed);
        report.summary.insert("hausdorff_triples".into(), json!(triples));
        report.summary.insert("hausdorff_axiom_failures".into(), json!(failures));
        Ok(report)
    }
}

/// Symmetry, identity and the triangle inequality on random point-set triples.
pub fn hausdorff_axioms(triples: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..triples {
        let set = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(1..60);
            PointSet::new("random", (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect())
        };
        let (a, b, c) = (set(&mut rng), set(&mut rng), set(&mut rng));
        let d = |x: &PointSet, y: &PointSet| hausdorff(x, y).unwrap();
        let ok = d(&a, &b) == d(&b, &a) && d(&a, &a) == 0.0 && d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12;
        if !ok {
            failures += 1;
        }
    }
    (triples, failures)
}

fn eps_desc(list: &[f64]) -> Vec<f64> {
    let mut v = list.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn rt<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Boundary samples of the shape, plus the inserted sphere if any.
fn reference_points(cfg: &ExperimentConfig, shape: &Shape, grid: &Grid, eps: f64) -> Vec<Point> {
    let spacing = grid.h() / 4.0;
    let mut pts = shape.boundary_points(grid, spacing);
    if let Some(ins) = &cfg.perturbation.insert {
        let r = ins.r_eps.radius(eps);
        let s = Shape::sphere(ins.x0, r);
        if grid.ndim() == 3 {
            pts.extend(s.boundary_points(grid, spacing));
        } else {
            pts.extend(Shape::circle([ins.x0[0], ins.x0[1]], r).boundary_points(grid, spacing));
        }
    }
    pts
}

struct EpsResult {
    row: Row,
    field: Option<Field>,
    base_cloud: Option<PointSet>,
    base: Option<Field>,
}

fn sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SweepReport, CliError> {
    let mut report = SweepReport::new(&cfg.name, "sweep");
    let keep = cfg.diagnostics.atoms || cfg.diagnostics.distant_tau.is_some();
    let mut fields = Vec::new();
    let mut finest_base: Option<(PointSet, Field)> = None;
    for eps in eps_desc(&cfg.eps_list) {
        match sweep_eps(cfg, eps, out, keep) {
            Ok(res) => {
                report.rows.push(res.row);
                if let Some(f) = res.field {
                    fields.push(f);
                }
                if let (Some(c), Some(b)) = (res.base_cloud, res.base) {
                    finest_base = Some((c, b));
                }
            }
            Err(e) => report.failures.push(EpsFailure { eps, error: e.to_string() }),
        }
    }
    if keep {
        if let Some((cloud, base)) = &finest_base {
            report.notes.push("the interface support is represented by the zero-level cloud of the unperturbed field at the finest eps".into());
            let d = &cfg.diagnostics;
            if d.atoms {
                match detect_atoms(&fields, d.theta_bar, d.r_probe, cloud) {
                    Ok(a) => {
                        report.summary.insert("atom_count".into(), json!(a.atoms.len()));
                        report.summary.insert("atom_positions".into(), json!(a.atoms.points));
                        report.summary.insert("atom_masses".into(), json!(a.masses));
                        for r in &mut report.rows {
                            r.set("atom_count", a.atoms.len() as f64);
                        }
                    }
                    Err(e) => report.notes.push(format!("atoms: {e}")),
                }
            }
            if let Some(tau) = d.distant_tau {
                let reference = base.with_values(base.values().iter().map(|u| u.signum()).collect()).map_err(rt)?;
                match distant_set(&fields, &reference, tau, cloud) {
                    Ok(ds) => {
                        report.summary.insert("distant_count".into(), json!(ds.candidates.len()));
                        report.summary.insert("distant_positions".into(), json!(ds.candidates.points));
                        report.summary.insert("distant_deviations".into(), json!(ds.deviations));
                        for r in &mut report.rows {
                            r.set("distant_count", ds.candidates.len() as f64);
                        }
                    }
                    Err(e) => report.notes.push(format!("distant set: {e}")),
                }
            }
        }
    }
    Ok(report)
}

fn sweep_eps(cfg: &ExperimentConfig, eps: f64, out: Option<&Path>, keep: bool) -> Result<EpsResult, CliError> {
    let ShapeSpec { shape, profile } = cfg.shape.as_ref().unwrap();
    let gspec = cfg.grid.as_ref().unwrap();
    let grid = gspec.grid_for(eps).map_err(rt)?;
    let ndim = grid.ndim();
    let base = recovery_field_with(shape, &grid, eps, *profile).map_err(rt)?;
    let penalty = &cfg.penalty;
    let mut row = Row::new(eps);

    let mut bumps: Vec<BumpSpec> = cfg.perturbation.bumps.clone();
    if let (n, Some(t)) = (cfg.perturbation.multi.count, &cfg.perturbation.multi.template) {
        let placed = quasi_random_bumps(n, t, &grid, eps, shape);
        row.set("bumps_placed", placed.len() as f64);
        bumps.extend(placed);
    }
    let mut field = if bumps.is_empty() { base.clone() } else { apply_bumps(&base, &bumps, shape).map_err(rt)? };
    if let Some(ins) = &cfg.perturbation.insert {
        field = insert_sphere(&field, ins).map_err(rt)?;
    }

    if let Some(fs) = &cfg.flow {
        let fp = fs.params(&field, penalty);
        let (next, trace, stalled) = match descend(&field, penalty, &fp) {
            Ok((f, t)) => (f, t, false),
            Err(FlowError::Stalled { trace, field, .. }) => (*field, *trace, true),
            Err(e) => return Err(rt(e)),
        };
        if let Some(d) = out {
            write_trace(&d.join(format!("trace_{eps}.csv")), &trace)?;
        }
        row.set("flow_steps", trace.accepted_steps as f64);
        let converged = trace.outcome == FlowOutcome::Converged && !stalled;
        row.set("flow_converged", converged as u8 as f64);
        // Stalled: stopped short of the gradient tolerance, by step underflow or the step budget.
        row.set("flow_stalled", !converged as u8 as f64);
        row.set("flow_dt_underflow", stalled as u8 as f64);
        row.set("flow_monotone", trace.is_monotone() as u8 as f64);
        row.set("flow_initial_E", trace.records[0].total_E);
        row.set("flow_grad_norm", trace.last().grad_norm);
        field = next;
    }

    let rep = energy_report(&field, penalty);
    let perturbed = !cfg.perturbation.is_empty();
    if perturbed {
        let b = energy_report(&base, penalty);
        row.set("dW", rep.W_eps - b.W_eps);
        row.set("dS", rep.S_eps - b.S_eps);
        if let Some(rb) = cfg.diagnostics.ball_radius {
            let (a1, m1) = (alpha_density(&field), mu_density(&field));
            let (a0, m0) = (alpha_density(&base), mu_density(&base));
            let centers: Vec<Point> = bumps.iter().map(|b| b.x0).chain(cfg.perturbation.insert.iter().map(|i| i.x0)).collect();
            for (k, x) in centers.iter().enumerate() {
                row.set(format!("dW_ball_{k}"), a1.ball_mass(x, rb) - a0.ball_mass(x, rb));
                row.set(format!("dmu_ball_{k}"), m1.ball_mass(x, rb) - m0.ball_mass(x, rb));
                row.set(format!("W_ball_{k}"), a1.ball_mass(x, rb));
                row.set(format!("mu_ball_{k}"), m1.ball_mass(x, rb));
            }
        }
    }
    let d = &cfg.diagnostics;
    if let Some(l) = d.interface_measure {
        let mask = interior_mask(&field);
        let alpha = alpha_density(&field);
        let w_int: f64 = alpha.values.iter().zip(&mask).filter(|(_, m)| **m).map(|(a, _)| a).sum::<f64>() * grid.cell_volume();
        row.set("S_norm", rep.S_eps / l);
        row.set("xi_abs_norm", rep.xi_abs_total / l);
        row.set("W_interior_norm", w_int / l);
    }
    row.set("xi_ratio", rep.xi_abs_total / rep.total_mu);

    let zero = LevelInterval::new(ZERO_BAND.0, ZERO_BAND.1).unwrap();
    let interval = d.levelset.unwrap_or(zero);
    let needs_cloud = d.levelset.is_some() || d.diameter || d.monotonicity_samples.is_some();
    let cloud = if needs_cloud { Some(extract_level_set(&field, interval)) } else { None };
    if let (Some(c), Some(_)) = (&cloud, d.levelset) {
        if let Some(dir) = out {
            write_points(&dir.join(format!("levelset_{eps}.csv")), c, ndim)?;
        }
        let reference = PointSet::new("analytic interface", reference_points(cfg, shape, &grid, eps));
        row.set("cloud_points", c.len() as f64);
        row.set("hausdorff_to_ref", if c.is_empty() { f64::INFINITY } else { hausdorff(c, &reference).map_err(rt)? });
    }
    if let Some(n) = d.holder_samples {
        row.set("holder_C", holder_probe(&field, n, cfg.seed).map_err(rt)?);
    }
    if let Some(n) = d.monotonicity_samples {
        let zc = extract_level_set(&field, zero);
        let (checked, failed, worst) = monotonicity_samples(&field, &zc, n, cfg.seed ^ eps.to_bits());
        row.set("mono_checked", checked as f64);
        row.set("mono_failed", failed as f64);
        row.set("mono_worst", worst);
    }
    if let Some((x, r, tau)) = d.band {
        row.set("band_mass", band_mass(&field, &x, r, tau).map_err(rt)?);
    }
    if let Some((x, r)) = d.sup_ball {
        let sup = grid.ball_cells(&x, r).into_iter().map(|i| (field.values()[i] - 1.0).abs()).fold(0.0, f64::max);
        row.set("sup_dev_ball", sup);
    }
    if d.diameter {
        let c = cloud.as_ref().unwrap();
        let dc = diameter_check(c, &rep)?;
        row.set("diam", dc.diam);
        row.set("diam_bound", dc.bound);
        row.set("diam_ok", dc.ok as u8 as f64);
    }
    if let Some(t) = &cfg.topo {
        let te = topo_energy(&field, t, Phase::One);
        row.set("topo_C1", te.estimate);
        row.set("topo_C1_stderr", te.stderr);
    }
    if let (Some(dir), true) = (out, cfg.snapshots) {
        write_snapshot(&field, dir.join(format!("field_{eps}.wpf"))).map_err(|e| CliError::Io(e.to_string()))?;
    }
    row.energy = Some(rep);
    let base_cloud = if keep { Some(extract_level_set(&base, zero)) } else { None };
    Ok(EpsResult { row, field: keep.then_some(field), base_cloud, base: keep.then_some(base) })
}

/// Random admissible `(x, r, R)`: `eps <= r < R <= 1` with `B_R(x)` inside the
/// box. Half the centres are drawn from `cloud` (the interface), half
/// uniformly. Returns `(checked, failed, worst lhs / (rhs + tol))`.
pub fn monotonicity_samples(f: &Field, cloud: &PointSet, samples: usize, seed: u64) -> (usize, usize, f64) {
    let grid = f.grid();
    let eps = f.eps();
    let lo = grid.origin();
    let hi = grid.upper();
    let half_min = (0..grid.ndim()).map(|a| (hi[a] - lo[a]) / 2.0).fold(f64::INFINITY, f64::min);
    let r_max = half_min.min(1.0) * 0.999;
    if r_max <= 1.5 * eps {
        return (0, 0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut failed, mut worst) = (0, 0, 0.0f64);
    let mut attempts = 0;
    while checked < samples && attempts < 100 * samples {
        attempts += 1;
        let big_r = rng.random_range(1.5 * eps..=r_max);
        let x = if !cloud.is_empty() && rng.random_bool(0.5) {
            cloud.points[rng.random_range(0..cloud.len())]
        } else {
            let mut p = [0.0; 3];
            for a in 0..grid.ndim() {
                p[a] = rng.random_range(lo[a] + big_r..=hi[a] - big_r);
            }
            p
        };
        if !grid.contains_ball(&x, big_r) {
            continue;
        }
        let r = rng.random_range(eps..big_r);
        if let Ok(m) = monotonicity_check(f, &x, r, big_r) {
            checked += 1;
            failed += (!m.ok) as usize;
            worst = worst.max(m.lhs / (m.rhs + m.tol));
        }
    }
    (checked, failed, worst)
}

/// Smooth random field: a few random Fourier modes on the unit box.
fn random_smooth(grid: &Grid, rng: &mut ChaCha8Rng, amplitude: f64, offset: f64) -> Vec<f64> {
    let modes: Vec<([f64; 3], f64, f64)> = (0..4)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.random_range(1..4) as f64 * 2.0 * std::f64::consts::PI);
            (k, rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(-1.0..1.0))
        })
        .collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            offset + amplitude * modes.iter().map(|(k, ph, a)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).sin()).sum::<f64>() / 2.0
        })
        .collect()
}

fn gradcheck(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    let spec = cfg.gradcheck.as_ref().unwrap();
    let mut report = SweepReport::new(&cfg.name, "gradcheck");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = spec.cells;
    let h = 1.0 / n as f64;
    let mut max_err: f64 = 0.0;
    for k in 0..spec.fields {
        let bc = [Boundary::Periodic, Boundary::NeumannReflect, Boundary::DirichletMinusOne][k % 3];
        let grid = Grid::with_zero_origin(&[n, n, n], h, bc).map_err(rt)?;
        let eps = h * rng.random_range(4.0..8.0);
        let offset = rng.random_range(-0.3..0.3);
        let u = random_smooth(&grid, &mut rng, 1.0, offset);
        let f = Field::new(grid.clone(), eps, u).map_err(rt)?;
        let p = PenaltyConfig {
            area_weight: rng.random_range(0.0..1.0),
            lambda_area: rng.random_range(0.0..2.0),
            target_area: rng.random_range(0.0..2.0),
            chi_volume: rng.random_range(0.0..2.0),
            target_volume: rng.random_range(0.0..1.0),
            sigma: rng.random_bool(0.3).then(|| rng.random_range(0.5..2.0)),
            kappa: None,
            topo: None,
        };
        let g = first_variation(&f, &p);
        let mut worst: f64 = 0.0;
        for _ in 0..spec.directions {
            // Cellwise noise keeps the direction from being orthogonal to the gradient.
            let phi: Vec<f64> = random_smooth(&grid, &mut rng, 1.0, 0.0).into_iter().map(|q| q + rng.random_range(-0.5..0.5)).collect();
            let analytic: f64 = g.values().iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
            let shifted = |s: f64| -> Result<f64, CliError> {
                let v = f.values().iter().zip(&phi).map(|(u, q)| u + s * q).collect();
                Ok(energy_report(&f.with_values(v).map_err(rt)?, &p).total_E)
            };
            let fd = (shifted(spec.step)? - shifted(-spec.step)?) / (2.0 * spec.step);
            let rel = (fd - analytic).abs() / analytic.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
        let mut row = Row::new(eps);
        row.set("field", k as f64);
        row.set("bc", (k % 3) as f64);
        row.set("rel_err", worst);
        report.rows.push(row);
        max_err = max_err.max(worst);
    }
    report.summary.insert("max_rel_err".into(), json!(max_err));
    Ok(report)
}

fn etheta(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    let spec = cfg.etheta.as_ref().unwrap();
    let mut report = SweepReport::new(&cfg.name, "etheta");
    let eps = eps_desc(&cfg.eps_list);
    let mut rows: Vec<Row> = eps.iter().map(|e| Row::new(*e)).collect();
    let fp = FlowParams { max_steps: spec.max_steps, dt0: 1.0, dt_min: 1.0, dt_max: 1.0, armijo_c: 1e-4, grad_tol: spec.grad_tol, record_every: 50 };
    for &theta in &spec.thetas {
        match estimate_e_theta(theta, &eps, &fp) {
            Ok(est) => {
                for (row, e) in rows.iter_mut().zip(est) {
                    row.set(format!("e_theta_{theta}"), e.estimate);
                    row.set(format!("center_{theta}"), e.center_value);
                    row.set(format!("steps_{theta}"), e.steps as f64);
                    row.set(format!("converged_{theta}"), (e.outcome == FlowOutcome::Converged) as u8 as f64);
                }
            }
            Err(e) => report.failures.push(EpsFailure { eps: f64::NAN, error: format!("theta = {theta}: {e}") }),
        }
    }
    report.notes.push("the unit ball is truncated to a box of half-width 6 eps around the constrained point".into());
    report.rows = rows;
    Ok(report)
}

fn topo(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    let t = cfg.topo.as_ref().unwrap();
    let gspec = cfg.grid.as_ref().unwrap();
    let mut report = SweepReport::new(&cfg.name, "topo");
    let mut cases: Vec<(String, &ShapeSpec)> = cfg.cases.iter().map(|(n, s)| (n.clone(), s)).collect();
    if let Some(s) = &cfg.shape {
        cases.insert(0, ("shape".into(), s));
    }
    for eps in eps_desc(&cfg.eps_list) {
        let mut row = Row::new(eps);
        let result: Result<(), CliError> = (|| {
            let grid = gspec.grid_for(eps).map_err(rt)?;
            for (name, s) in &cases {
                let f = recovery_field_with(&s.shape, &grid, eps, s.profile).map_err(rt)?;
                let e = topo_energy(&f, t, Phase::One);
                row.set(format!("C1_{name}"), e.estimate);
                row.set(format!("C1_stderr_{name}"), e.stderr);
                row.set(format!("C1_samples_{name}"), e.samples as f64);
            }
            Ok(())
        })();
        match result {
            Ok(()) => report.rows.push(row),
            Err(e) => report.failures.push(EpsFailure { eps, error: e.to_string() }),
        }
    }
    Ok(report)
}
