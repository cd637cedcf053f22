//! Probes of the convergence results: level sets and Hausdorff distances,
//! ball masses, the monotonicity inequality, atoms, distant sets, Hölder
//! quotients and band masses.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{alpha_density, discrepancy_densities, interior_mask, mu_density, DensityField};
use crate::error::{ConfigError, DiagnosticError};
use crate::grid::{distance, Boundary, Field, Grid, Point};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub label: String,
}

impl PointSet {
    pub fn new(label: impl Into<String>, points: Vec<Point>) -> Self {
        Self { points, label: label.into() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let pts = &self.points;
        (0..pts.len())
            .into_par_iter()
            .map(|i| pts[i + 1..].iter().map(|q| distance(&pts[i], q)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelInterval {
    pub lo: f64,
    pub hi: f64,
}

impl LevelInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ConfigError> {
        if !(lo > -1.0 && lo <= hi && hi < 1.0) {
            return Err(ConfigError::Interval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }
}

/// Levels at which edge crossings are interpolated: multiples of 1/16.
const CROSSING_LEVELS: i32 = 16;

/// Cell centres with `u` in `I`, followed by linearly interpolated crossings
/// along lattice edges of every level `k/16` inside `I`. Levels sit on a fixed
/// lattice so the output for `I` is a subset of the output for any `I' ⊇ I`.
pub fn extract_level_set(f: &Field, i: LevelInterval) -> PointSet {
    let grid = f.grid();
    let u = f.values();
    let levels: Vec<f64> = (-CROSSING_LEVELS + 1..CROSSING_LEVELS)
        .map(|k| k as f64 / CROSSING_LEVELS as f64)
        .filter(|c| i.contains(*c))
        .collect();
    let mut points: Vec<Point> = (0..u.len()).filter(|&k| i.contains(u[k])).map(|k| grid.center(k)).collect();
    let strides = grid.strides();
    let shape = grid.shape();
    let h = grid.h();
    let crossings: Vec<Vec<Point>> = (0..u.len())
        .into_par_iter()
        .map(|k| {
            let c = grid.coords(k);
            let mut out = Vec::new();
            for a in 0..grid.ndim() {
                if c[a] + 1 >= shape[a] {
                    continue;
                }
                let (u0, u1) = (u[k], u[k + strides[a]]);
                for &lv in &levels {
                    if (u0 - lv) * (u1 - lv) < 0.0 {
                        let mut p = grid.center(k);
                        p[a] += (lv - u0) / (u1 - u0) * h;
                        out.push(p);
                    }
                }
            }
            out
        })
        .collect();
    points.extend(crossings.into_iter().flatten());
    PointSet::new(format!("u in [{}, {}]", i.lo, i.hi), points)
}

/// Uniform bucket index over a point set for exact nearest-neighbour queries.
pub struct PointIndex<'a> {
    points: &'a [Point],
    lo: Point,
    size: f64,
    dims: [usize; 3],
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let ext: Vec<f64> = (0..3).map(|a| (hi[a] - lo[a]).max(0.0)).collect();
        let used: Vec<f64> = ext.iter().copied().filter(|e| *e > 0.0).collect();
        let n = points.len().max(1) as f64;
        let size = if used.is_empty() {
            1.0
        } else {
            let vol: f64 = used.iter().product();
            (vol / n).powf(1.0 / used.len() as f64).max(used.iter().cloned().fold(0.0, f64::max) * 1e-4) * 2.0
        };
        let dims = [0, 1, 2].map(|a| ((ext[a] / size).floor() as usize + 1).min(1 << 12));
        let total = dims[0] * dims[1] * dims[2];
        let mut index = Self { points, lo, size, dims, start: vec![0; total + 1], order: vec![0; points.len()] };
        let keys: Vec<usize> = points.iter().map(|p| index.key(index.bucket(p))).collect();
        for &k in &keys {
            index.start[k + 1] += 1;
        }
        for b in 0..total {
            index.start[b + 1] += index.start[b];
        }
        let mut fill = index.start.clone();
        for (i, &k) in keys.iter().enumerate() {
            index.order[fill[k]] = i;
            fill[k] += 1;
        }
        index
    }

    fn bucket(&self, p: &Point) -> [i64; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.lo[a]) / self.size).floor() as i64).clamp(0, self.dims[a] as i64 - 1))
    }

    fn key(&self, b: [i64; 3]) -> usize {
        (b[0] as usize * self.dims[1] + b[1] as usize) * self.dims[2] + b[2] as usize
    }

    /// Distance from `p` to the closest indexed point (infinite when empty).
    pub fn nearest(&self, p: &Point) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let c = self.bucket(p);
        let max_ring = self.dims.iter().copied().max().unwrap() as i64;
        let mut best = f64::INFINITY;
        for k in 0..=max_ring {
            for i in c[0] - k..=c[0] + k {
                if i < 0 || i >= self.dims[0] as i64 {
                    continue;
                }
                for j in c[1] - k..=c[1] + k {
                    if j < 0 || j >= self.dims[1] as i64 {
                        continue;
                    }
                    for l in c[2] - k..=c[2] + k {
                        if l < 0 || l >= self.dims[2] as i64 {
                            continue;
                        }
                        let ring = (i - c[0]).abs().max((j - c[1]).abs()).max((l - c[2]).abs());
                        if ring != k {
                            continue;
                        }
                        let key = self.key([i, j, l]);
                        for &q in &self.order[self.start[key]..self.start[key + 1]] {
                            best = best.min(distance(p, &self.points[q]));
                        }
                    }
                }
            }
            // Buckets beyond ring k are at least k bucket widths away.
            if best <= k as f64 * self.size {
                break;
            }
        }
        best
    }
}

fn directed(a: &PointSet, b: &PointSet) -> f64 {
    let index = PointIndex::new(&b.points);
    a.points.par_iter().map(|p| index.nearest(p)).reduce(|| 0.0, f64::max)
}

/// Exact Hausdorff distance between two nonempty point sets.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64, DiagnosticError> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(DiagnosticError::EmptySet(s.label.clone()));
        }
    }
    Ok(directed(a, b).max(directed(b, a)))
}

fn check_ball(grid: &Grid, x: &Point, r: f64) -> Result<(), DiagnosticError> {
    if !grid.contains_ball(x, r) {
        return Err(DiagnosticError::BallOutside { x: *x, r });
    }
    Ok(())
}

/// `r^{1-n} d(B_r(x))` with cell-centre inclusion.
pub fn ball_mass_ratio(d: &DensityField, x: &Point, r: f64) -> Result<f64, DiagnosticError> {
    check_ball(&d.grid, x, r)?;
    Ok(r.powi(1 - d.grid.ndim() as i32) * d.ball_mass(x, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityResult {
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub ok: bool,
}

/// Nodes of the midpoint rule for the `rho` integral.
const RHO_NODES: usize = 32;

/// Both sides of
/// `r^{1-n} mu(B_r) <= 3 R^{1-n} mu(B_R) + 3 alpha(B_R) + 2 ∫_r^R xi_+(B_rho) rho^{-n} d rho`.
pub fn monotonicity_check(f: &Field, x: &Point, r: f64, big_r: f64) -> Result<MonotonicityResult, DiagnosticError> {
    let grid = f.grid();
    let eps = f.eps();
    if !(eps <= r && r < big_r && big_r <= 1.0) {
        return Err(DiagnosticError::Radii { eps, r, big_r });
    }
    check_ball(grid, x, big_r)?;
    let n = grid.ndim() as i32;
    let dv = grid.cell_volume();
    let mu = mu_density(f).values;
    let alpha = alpha_density(f).values;
    let (xi_plus, _) = discrepancy_densities(f);
    let mut cells: Vec<(f64, usize)> = grid.ball_cells(x, big_r).into_iter().map(|i| (distance(&grid.center(i), x), i)).collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let radii: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut xi_cum = Vec::with_capacity(cells.len() + 1);
    xi_cum.push(0.0);
    for (_, i) in &cells {
        xi_cum.push(xi_cum.last().unwrap() + xi_plus.values[*i] * dv);
    }
    let count_within = |rho: f64| radii.partition_point(|d| *d <= rho);
    let mu_r: f64 = cells[..count_within(r)].iter().map(|(_, i)| mu[*i]).sum::<f64>() * dv;
    let mu_big: f64 = cells.iter().map(|(_, i)| mu[*i]).sum::<f64>() * dv;
    let alpha_big: f64 = cells.iter().map(|(_, i)| alpha[*i]).sum::<f64>() * dv;
    let step = (big_r - r) / RHO_NODES as f64;
    let integral: f64 = (0..RHO_NODES)
        .map(|k| {
            let rho = r + (k as f64 + 0.5) * step;
            xi_cum[count_within(rho)] / rho.powi(n)
        })
        .sum::<f64>()
        * step;
    let lhs = r.powi(1 - n) * mu_r;
    let rhs = 3.0 * big_r.powi(1 - n) * mu_big + 3.0 * alpha_big + 2.0 * integral;
    let cell_mass = cells.iter().map(|(_, i)| mu[*i]).fold(0.0, f64::max) * dv * r.powi(1 - n);
    let tol = 0.05 * rhs + cell_mass;
    Ok(MonotonicityResult { lhs, rhs, tol, ok: lhs <= rhs + tol })
}

/// `mu` mass of `B_r(x) ∩ {1 - tau <= |u| <= 1}`.
pub fn band_mass(f: &Field, x: &Point, r: f64, tau: f64) -> Result<f64, DiagnosticError> {
    let grid = f.grid();
    check_ball(grid, x, r)?;
    let mu = mu_density(f).values;
    let u = f.values();
    Ok(grid
        .ball_cells(x, r)
        .into_iter()
        .filter(|&i| (1.0 - tau..=1.0).contains(&u[i].abs()))
        .map(|i| mu[i])
        .sum::<f64>()
        * grid.cell_volume())
}

/// Largest `|u(y) - u(z)| eps^{1/2} / |y - z|^{1/2}` over `samples` random
/// interior cell pairs with `0 < |y - z| <= eps`.
pub fn holder_probe(f: &Field, samples: usize, seed: u64) -> Result<f64, DiagnosticError> {
    let grid = f.grid();
    let eps = f.eps();
    let interior: Vec<usize> = interior_mask(f).iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect();
    if interior.is_empty() {
        return Err(DiagnosticError::Input("interior mask is empty".into()));
    }
    let h = grid.h();
    let reach = (eps / h).floor() as i64;
    let zr = if grid.ndim() == 3 { reach } else { 0 };
    let mut offsets = Vec::new();
    for dz in -zr..=zr {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d2 = (dx * dx + dy * dy + dz * dz) as f64 * h * h;
                if d2 > 0.0 && d2 <= eps * eps {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    if offsets.is_empty() {
        return Err(DiagnosticError::Input("eps is below one cell".into()));
    }
    let u = f.values();
    let shape = grid.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let y = interior[rng.random_range(0..interior.len())];
        let o = offsets[rng.random_range(0..offsets.len())];
        let c = grid.coords(y);
        let mut zc = [0usize; 3];
        let mut inside = true;
        for a in 0..3 {
            let v = c[a] as i64 + o[a];
            if v < 0 || v >= shape[a] as i64 {
                inside = false;
                break;
            }
            zc[a] = v as usize;
        }
        if !inside {
            continue;
        }
        let z = grid.index(zc);
        let d = distance(&grid.center(y), &grid.center(z));
        best = best.max((u[y] - u[z]).abs() * eps.sqrt() / d.sqrt());
    }
    Ok(best)
}

/// Face-connected components of the masked cells, ordered by smallest index.
fn components(grid: &Grid, mask: &[bool]) -> Vec<Vec<usize>> {
    let shape = grid.shape();
    let strides = grid.strides();
    let periodic = grid.bc() == Boundary::Periodic;
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for s in 0..mask.len() {
        if !mask[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![];
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let c = grid.coords(i);
            for a in 0..grid.ndim() {
                for up in [false, true] {
                    let j = if up {
                        if c[a] + 1 < shape[a] {
                            i + strides[a]
                        } else if periodic {
                            i + strides[a] - shape[a] * strides[a]
                        } else {
                            continue;
                        }
                    } else if c[a] > 0 {
                        i - strides[a]
                    } else if periodic {
                        i + (shape[a] - 1) * strides[a]
                    } else {
                        continue;
                    };
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Volume of the `n`-ball of radius `r`.
pub fn ball_volume(ndim: usize, r: f64) -> f64 {
    match ndim {
        2 => std::f64::consts::PI * r * r,
        _ => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
    }
}

/// Cells further than `clearance` from every point of `exclusion`.
fn clear_of(grid: &Grid, exclusion: &PointSet, clearance: f64) -> Vec<bool> {
    let index = PointIndex::new(&exclusion.points);
    (0..grid.len()).into_par_iter().map(|i| index.nearest(&grid.center(i)) >= clearance).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub atoms: PointSet,
    /// `alpha` mass of each atom at the finest eps.
    pub masses: Vec<f64>,
    pub theta_bar: f64,
    pub r_probe: f64,
}

pub const DEFAULT_THETA_BAR: f64 = 1.0;
pub const DEFAULT_R_PROBE: f64 = 0.05;

/// Clusters of `alpha` away from the interface: `(centroid, mass)` pairs.
fn alpha_clusters(f: &Field, theta_bar: f64, exclusion: &PointSet) -> Vec<(Point, f64)> {
    let grid = f.grid();
    let eps = f.eps();
    let alpha = alpha_density(f).values;
    let floor = theta_bar / (1000.0 * ball_volume(grid.ndim(), eps));
    let mask: Vec<bool> = alpha.iter().map(|a| *a >= floor).collect();
    let clear = clear_of(grid, exclusion, 3.0 * eps);
    let dv = grid.cell_volume();
    components(grid, &mask)
        .into_iter()
        .filter(|c| c.iter().all(|&i| clear[i]))
        .map(|c| {
            let mass: f64 = c.iter().map(|&i| alpha[i]).sum();
            let mut centroid = [0.0; 3];
            for &i in &c {
                let p = grid.center(i);
                for a in 0..3 {
                    centroid[a] += alpha[i] * p[a] / mass;
                }
            }
            (centroid, mass * dv)
        })
        .collect()
}

/// Sort fields by decreasing eps (finest last).
fn by_eps(fields: &[Field]) -> Vec<&Field> {
    let mut v: Vec<&Field> = fields.iter().collect();
    v.sort_by(|a, b| b.eps().total_cmp(&a.eps()));
    v
}

/// Merge points closer than `r`, keeping the first of each group.
fn merge(points: Vec<(Point, f64)>, r: f64) -> Vec<(Point, f64)> {
    let mut out: Vec<(Point, f64)> = Vec::new();
    for (p, m) in points {
        if !out.iter().any(|(q, _)| distance(&p, q) <= r) {
            out.push((p, m));
        }
    }
    out
}

/// Points where `alpha` keeps concentrating at least `theta_bar` across every
/// supplied eps. Concentrations within `3 eps` of `exclusion` (the interface)
/// are ignored; clusters of different fields are matched within `r_probe`.
pub fn detect_atoms(fields: &[Field], theta_bar: f64, r_probe: f64, exclusion: &PointSet) -> Result<AtomReport, DiagnosticError> {
    if fields.len() < 2 {
        return Err(DiagnosticError::Input(format!("detect_atoms needs at least 2 fields, got {}", fields.len())));
    }
    if !(theta_bar > 0.0 && r_probe > 0.0) {
        return Err(DiagnosticError::Input("theta_bar and r_probe must be positive".into()));
    }
    let sorted = by_eps(fields);
    let per_field: Vec<Vec<(Point, f64)>> = sorted
        .iter()
        .map(|f| alpha_clusters(f, theta_bar, exclusion).into_iter().filter(|(_, m)| *m >= theta_bar).collect())
        .collect();
    let (finest, coarser) = per_field.split_last().unwrap();
    let persistent: Vec<(Point, f64)> = finest
        .iter()
        .filter(|(p, _)| coarser.iter().all(|cands| cands.iter().any(|(q, _)| distance(p, q) <= r_probe)))
        .cloned()
        .collect();
    let merged = merge(persistent, r_probe);
    Ok(AtomReport {
        atoms: PointSet::new("atoms", merged.iter().map(|(p, _)| *p).collect()),
        masses: merged.iter().map(|(_, m)| *m).collect(),
        theta_bar,
        r_probe,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistantSetReport {
    pub tau: f64,
    pub candidates: PointSet,
    /// Largest `|u - u_ref|` of each candidate's cluster at the finest eps.
    pub deviations: Vec<f64>,
}

pub const DEFAULT_TAU: f64 = 0.1;

/// Points at least `3 eps` from `exclusion` where `|u_eps - u_ref| >= tau`
/// persists across every supplied eps. `u_ref` is sampled at cell centres, so
/// it may live on a different grid. Clusters of different fields are matched
/// within twice the largest eps.
pub fn distant_set(fields: &[Field], u_ref: &Field, tau: f64, exclusion: &PointSet) -> Result<DistantSetReport, DiagnosticError> {
    if fields.is_empty() {
        return Err(DiagnosticError::Input("distant_set needs at least one field".into()));
    }
    if !(tau > 0.0) {
        return Err(DiagnosticError::Input(format!("tau must be positive, got {tau}")));
    }
    let sorted = by_eps(fields);
    let r_match = 2.0 * sorted[0].eps();
    let per_field: Vec<Vec<(Point, f64)>> = sorted
        .iter()
        .map(|f| {
            let grid = f.grid();
            let dev: Vec<f64> = (0..grid.len()).map(|i| (f.values()[i] - u_ref.sample(&grid.center(i))).abs()).collect();
            let clear = clear_of(grid, exclusion, 3.0 * f.eps());
            let mask: Vec<bool> = (0..grid.len()).map(|i| clear[i] && dev[i] >= tau).collect();
            components(grid, &mask)
                .into_iter()
                .map(|c| {
                    let peak = *c.iter().max_by(|a, b| dev[**a].total_cmp(&dev[**b]).then(b.cmp(a))).unwrap();
                    (grid.center(peak), dev[peak])
                })
                .collect()
        })
        .collect();
    let (finest, coarser) = per_field.split_last().unwrap();
    let kept: Vec<(Point, f64)> = finest
        .iter()
        .filter(|(p, _)| coarser.iter().all(|cands| cands.iter().any(|(q, _)| distance(p, q) <= r_match)))
        .cloned()
        .collect();
    let kept = merge(kept, r_match);
    Ok(DistantSetReport {
        tau,
        candidates: PointSet::new("distant set", kept.iter().map(|(p, _)| *p).collect()),
        deviations: kept.iter().map(|(_, d)| *d).collect(),
    })
}
