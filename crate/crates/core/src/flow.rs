//! Explicit gradient descent on the penalised energies with Armijo step
//! control, and the constrained minimisation behind `e(theta)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{first_variation, l2_norm, objective, DoubleWell, PenaltyConfig, C0};
use crate::error::{ConfigError, GridError};
use crate::grid::{Boundary, Field, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub max_steps: usize,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub armijo_c: f64,
    pub grad_tol: f64,
    pub record_every: usize,
}

impl FlowParams {
    /// Steps sized from [`stable_dt`] for this field and penalty.
    pub fn for_field(f: &Field, p: &PenaltyConfig, max_steps: usize, grad_tol: f64) -> Self {
        let dt = stable_dt(f, p);
        Self { max_steps, dt0: dt, dt_min: dt * 1e-6, dt_max: dt, armijo_c: 1e-4, grad_tol, record_every: 10 }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Flow(m));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt0 && self.dt0 <= self.dt_max && self.dt_max.is_finite()) {
            return bad(format!("need 0 < dt_min <= dt0 <= dt_max, got {} / {} / {}", self.dt_min, self.dt0, self.dt_max));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c));
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

/// Largest explicit step that keeps the stiffest lattice mode stable,
/// `1.9 / lambda_max` with `lambda_max` bounded from the stencil norm.
pub fn stable_dt(f: &Field, p: &PenaltyConfig) -> f64 {
    let grid = f.grid();
    let eps = f.eps();
    let h = grid.h();
    let stencil = 4.0 * grid.ndim() as f64 / (h * h);
    let ddw = f.values().iter().map(|&u| DoubleWell::ddw(u).abs()).fold(2.0, f64::max);
    let j = eps * stencil + ddw / eps;
    let s_weight = p.area_weight + 2.0 * p.effective_lambda(eps) * 1.0;
    let lambda = 2.0 / (C0 * eps) * j * j + s_weight / C0 * j;
    1.9 / lambda
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TraceRecord {
    pub step: usize,
    pub total_E: f64,
    pub S_eps: f64,
    pub W_eps: f64,
    pub grad_norm: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOutcome {
    Converged,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub records: Vec<TraceRecord>,
    pub outcome: FlowOutcome,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl FlowTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    /// `total_E` never increases between records.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].total_E <= w[0].total_E)
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("step size collapsed below dt_min = {dt_min} at step {step}")]
    Stalled { step: usize, dt_min: f64, trace: Box<FlowTrace>, field: Box<Field> },
}

/// Descend `E` from `f0` until `grad_norm < grad_tol` or `max_steps`.
pub fn descend(f0: &Field, p: &PenaltyConfig, fp: &FlowParams) -> Result<(Field, FlowTrace), FlowError> {
    descend_projected(f0, p, fp, |_| {})
}

/// As [`descend`], applying `project` to every trial state. Acceptance uses
/// `E(u_new) <= E(u) - (c / dt) |u_new - u|^2`, which reduces to the usual
/// Armijo test when `project` is the identity.
pub fn descend_projected<P>(f0: &Field, p: &PenaltyConfig, fp: &FlowParams, project: P) -> Result<(Field, FlowTrace), FlowError>
where
    P: Fn(&mut [f64]),
{
    p.validate()?;
    fp.validate()?;
    let dv = f0.grid().cell_volume();
    let mut u = f0.values().to_vec();
    project(&mut u);
    let mut f = f0.with_values(u)?;
    let (mut e, mut s, mut w) = objective(&f, p);
    let mut grad = first_variation(&f, p);
    let mut gnorm = l2_norm(&grad);
    let mut dt = fp.dt0;
    let record = |step, e, s, w, g, dt| TraceRecord { step, total_E: e, S_eps: s, W_eps: w, grad_norm: g, dt };
    let mut trace = FlowTrace { records: vec![record(0, e, s, w, gnorm, dt)], outcome: FlowOutcome::MaxSteps, accepted_steps: 0, rejected_steps: 0 };
    let mut step = 0;
    while step < fp.max_steps {
        if gnorm < fp.grad_tol {
            trace.outcome = FlowOutcome::Converged;
            break;
        }
        let accepted = loop {
            let mut trial: Vec<f64> = f.values().iter().zip(grad.values()).map(|(u, g)| u - dt * g).collect();
            project(&mut trial);
            let moved = trial.iter().zip(f.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * dv;
            if trial.iter().all(|x| x.is_finite()) {
                let cand = f.with_values(trial)?;
                let (ce, cs, cw) = objective(&cand, p);
                if ce <= e - fp.armijo_c / dt * moved {
                    break Some((cand, ce, cs, cw));
                }
            }
            trace.rejected_steps += 1;
            dt *= 0.5;
            if dt < fp.dt_min {
                break None;
            }
        };
        let Some((cand, ce, cs, cw)) = accepted else {
            trace.records.push(record(step, e, s, w, gnorm, dt));
            return Err(FlowError::Stalled { step, dt_min: fp.dt_min, trace: Box::new(trace), field: Box::new(f) });
        };
        step += 1;
        trace.accepted_steps += 1;
        let used = dt;
        f = cand;
        (e, s, w) = (ce, cs, cw);
        grad = first_variation(&f, p);
        gnorm = l2_norm(&grad);
        dt = (dt * 1.25).min(fp.dt_max);
        if step % fp.record_every == 0 || gnorm < fp.grad_tol || step == fp.max_steps {
            trace.records.push(record(step, e, s, w, gnorm, used));
        }
    }
    if gnorm < fp.grad_tol {
        trace.outcome = FlowOutcome::Converged;
    }
    Ok((f, trace))
}

/// Box half-width, in units of eps, for the `e(theta)` problem.
pub const ETHETA_HALF_WIDTH: f64 = 6.0;
/// Cells per eps for the `e(theta)` problem.
pub const ETHETA_CELLS_PER_EPS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EThetaEstimate {
    pub theta: f64,
    pub eps: f64,
    pub estimate: f64,
    pub center_value: f64,
    pub outcome: FlowOutcome,
    pub steps: usize,
}

/// Cubic Neumann box centred at the origin with a cell centre at the origin,
/// half-width `min(1, 6 eps)`.
pub fn etheta_grid(eps: f64) -> Result<Grid, GridError> {
    let h = eps / ETHETA_CELLS_PER_EPS;
    let half = (ETHETA_HALF_WIDTH * eps).min(1.0);
    let n = 2 * (half / h).round() as usize + 1;
    let o = -(n as f64) * h / 2.0;
    Grid::new(&[n, n, n], h, &[o, o, o], Boundary::NeumannReflect)
}

/// Minimise `W + S` subject to `|u(0)| <= theta` for each eps.
///
/// The minimiser is a dimple of width O(eps) around the origin (both terms
/// are invariant or shrink under `x -> x / eps`), so the unit ball is
/// truncated to a box of half-width `6 eps`; the omitted region carries
/// `u = 1` and no energy. `max_steps` and `grad_tol` come from `fp`; the step
/// sizes are recomputed per eps.
pub fn estimate_e_theta(theta: f64, eps_list: &[f64], fp: &FlowParams) -> Result<Vec<EThetaEstimate>, FlowError> {
    if !(0.0..1.0).contains(&theta) {
        return Err(ConfigError::Flow(format!("theta must lie in [0, 1), got {theta}")).into());
    }
    let p = PenaltyConfig::willmore_plus_area();
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let grid = etheta_grid(eps)?;
        let n = grid.shape()[0];
        let center = grid.index([n / 2, n / 2, n / 2]);
        let depth = 1.0 - theta;
        let f0 = Field::from_fn(grid, eps, |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            1.0 - depth * (-std::f64::consts::SQRT_2 * r / eps).exp()
        })?;
        let base = FlowParams::for_field(&f0, &p, fp.max_steps, fp.grad_tol);
        let local = FlowParams { armijo_c: fp.armijo_c, record_every: fp.record_every, ..base };
        let (f, trace) = descend_projected(&f0, &p, &local, |u| u[center] = u[center].clamp(-theta, theta))?;
        out.push(EThetaEstimate {
            theta,
            eps,
            estimate: trace.last().total_E,
            center_value: f.values()[center],
            outcome: trace.outcome,
            steps: trace.accepted_steps,
        });
    }
    Ok(out)
}
