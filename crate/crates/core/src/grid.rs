//! Uniform cell-centred grids, scalar fields, the second-order difference
//! operators and the `WPF1` snapshot format.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, SnapshotError};

/// Smallest admissible cell count per axis.
pub const MIN_CELLS: usize = 8;

/// Default resolution contract: `eps >= DEFAULT_CELLS_PER_EPS * h`.
pub const DEFAULT_CELLS_PER_EPS: f64 = 4.0;

/// How ghost cells outside the box are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    /// Even reflection across the boundary face (zero normal derivative).
    NeumannReflect,
    /// Constant `-1` outside the box.
    DirichletMinusOne,
}

impl Boundary {
    pub fn code(self) -> char {
        match self {
            Boundary::Periodic => 'P',
            Boundary::NeumannReflect => 'N',
            Boundary::DirichletMinusOne => 'D',
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "P" => Some(Boundary::Periodic),
            "N" => Some(Boundary::NeumannReflect),
            "D" => Some(Boundary::DirichletMinusOne),
            _ => None,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// A spatial point. Two-dimensional points keep `z = 0`.
pub type Point = [f64; 3];

pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Uniform rectangular lattice of cells.
///
/// Two-dimensional grids are stored with `shape[2] == 1`, so the flat index
/// `(i * n1 + j) * n2 + k` is row-major with the last axis fastest in both
/// cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    ndim: usize,
    shape: [usize; 3],
    h: f64,
    origin: Point,
    bc: Boundary,
}

impl Grid {
    pub fn new(shape: &[usize], h: f64, origin: &[f64], bc: Boundary) -> Result<Self, GridError> {
        let ndim = shape.len();
        if !(2..=3).contains(&ndim) {
            return Err(GridError::Dimension(ndim));
        }
        if origin.len() != ndim {
            return Err(GridError::OriginLength { ndim, got: origin.len() });
        }
        if let Some(&n) = shape.iter().find(|&&n| n < MIN_CELLS) {
            return Err(GridError::TooFewCells(n));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::Spacing(h));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(GridError::NonFiniteOrigin);
        }
        let mut s = [1usize; 3];
        let mut o = [0.0; 3];
        s[..ndim].copy_from_slice(shape);
        o[..ndim].copy_from_slice(origin);
        Ok(Self { ndim, shape: s, h, origin: o, bc })
    }

    /// Grid whose box starts at the origin.
    pub fn with_zero_origin(shape: &[usize], h: f64, bc: Boundary) -> Result<Self, GridError> {
        Self::new(shape, h, &vec![0.0; shape.len()], bc)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// Per-axis cell counts (length `ndim`).
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.ndim]
    }

    /// Cell counts padded to three axes (a 2D grid has one cell along z).
    pub fn dims(&self) -> [usize; 3] {
        self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn bc(&self) -> Boundary {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one cell, `h^ndim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.ndim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.len() as f64
    }

    /// Box extent per axis.
    pub fn extent(&self) -> Point {
        let mut e = [0.0; 3];
        for (a, e) in e.iter_mut().enumerate().take(self.ndim) {
            *e = self.shape[a] as f64 * self.h;
        }
        e
    }

    pub fn upper(&self) -> Point {
        let e = self.extent();
        [self.origin[0] + e[0], self.origin[1] + e[1], self.origin[2] + e[2]]
    }

    pub(crate) fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.shape[1] + c[1]) * self.shape[2] + c[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.shape[2];
        let rest = idx / self.shape[2];
        [rest / self.shape[1], rest % self.shape[1], k]
    }

    /// Centre of cell `idx`: `origin + (i + 1/2) h` per axis.
    #[inline]
    pub fn center(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for (a, p) in p.iter_mut().enumerate().take(self.ndim) {
            *p = self.origin[a] + (c[a] as f64 + 0.5) * self.h;
        }
        p
    }

    /// Cell containing `p`, clamped to the box.
    pub fn locate(&self, p: &Point) -> usize {
        let mut c = [0usize; 3];
        for (a, c) in c.iter_mut().enumerate().take(self.ndim) {
            let i = ((p[a] - self.origin[a]) / self.h).floor();
            *c = i.clamp(0.0, (self.shape[a] - 1) as f64) as usize;
        }
        self.index(c)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let up = self.upper();
        (0..self.ndim).all(|a| p[a] >= self.origin[a] && p[a] <= up[a])
    }

    /// Whether the closed ball `B_r(x)` lies inside the box.
    pub fn contains_ball(&self, x: &Point, r: f64) -> bool {
        let up = self.upper();
        (0..self.ndim).all(|a| x[a] - r >= self.origin[a] - 1e-12 && x[a] + r <= up[a] + 1e-12)
    }

    /// Distance from a point to the box boundary; infinite for periodic grids.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        if self.bc == Boundary::Periodic {
            return f64::INFINITY;
        }
        let up = self.upper();
        (0..self.ndim)
            .map(|a| (p[a] - self.origin[a]).min(up[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cells whose centre lies at distance `>= margin` from the boundary.
    pub fn interior_mask(&self, margin: f64) -> Vec<bool> {
        (0..self.len()).map(|i| self.boundary_distance(&self.center(i)) >= margin).collect()
    }

    /// Cell indices whose centres lie in the closed ball `B_r(x)`.
    pub fn ball_cells(&self, x: &Point, r: f64) -> Vec<usize> {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            if a < self.ndim {
                let l = ((x[a] - r - self.origin[a]) / self.h - 0.5).floor().max(0.0);
                let u = ((x[a] + r - self.origin[a]) / self.h - 0.5).ceil();
                lo[a] = l as usize;
                hi[a] = (u.max(0.0) as usize).min(self.shape[a] - 1);
            }
        }
        let r2 = r * r;
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let idx = self.index([i, j, k]);
                    let c = self.center(idx);
                    let d2 = (0..self.ndim).map(|a| (c[a] - x[a]).powi(2)).sum::<f64>();
                    if d2 <= r2 {
                        out.push(idx);
                    }
                }
            }
        }
        out
    }

    /// Neighbour value of cell `c` along `axis` in direction `dir` (`-1` or `+1`),
    /// with ghost values supplied by the boundary mode. `dirichlet` is the ghost
    /// value used in `DirichletMinusOne` mode. Returns the value and whether the
    /// face crossed is a non-periodic box face.
    #[inline]
    fn neighbor(&self, values: &[f64], idx: usize, c: &[usize; 3], axis: usize, dir: isize, dirichlet: f64) -> (f64, bool) {
        let n = self.shape[axis];
        let s = self.strides()[axis];
        let i = c[axis];
        if dir < 0 && i == 0 {
            match self.bc {
                Boundary::Periodic => (values[idx + (n - 1) * s], false),
                Boundary::NeumannReflect => (values[idx], true),
                Boundary::DirichletMinusOne => (dirichlet, true),
            }
        } else if dir > 0 && i == n - 1 {
            match self.bc {
                Boundary::Periodic => (values[idx - (n - 1) * s], false),
                Boundary::NeumannReflect => (values[idx], true),
                Boundary::DirichletMinusOne => (dirichlet, true),
            }
        } else if dir < 0 {
            (values[idx - s], false)
        } else {
            (values[idx + s], false)
        }
    }

    /// Per-cell map in parallel over leading-axis slabs.
    fn map_cells<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize, [usize; 3]) -> f64 + Sync,
    {
        let slab = self.strides()[0];
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(slab).enumerate().for_each(|(i, chunk)| {
            for (off, o) in chunk.iter_mut().enumerate() {
                let idx = i * slab + off;
                *o = f(idx, self.coords(idx));
            }
        });
        out
    }

    /// Five/seven-point Laplacian of raw cell values. `dirichlet` is the ghost
    /// value in `DirichletMinusOne` mode (`-1` for fields, `0` for the linear
    /// part of the operator).
    pub(crate) fn laplacian_values(&self, values: &[f64], dirichlet: f64) -> Vec<f64> {
        let inv_h2 = 1.0 / (self.h * self.h);
        self.map_cells(|idx, c| {
            let u = values[idx];
            let mut acc = 0.0;
            for axis in 0..self.ndim {
                let (m, _) = self.neighbor(values, idx, &c, axis, -1, dirichlet);
                let (p, _) = self.neighbor(values, idx, &c, axis, 1, dirichlet);
                acc += m - 2.0 * u + p;
            }
            acc * inv_h2
        })
    }

    /// Per-cell `|grad u|^2` as the mean of squared forward and backward
    /// differences. A non-periodic box face belongs to one real cell only and
    /// carries full weight there, so the cell sum equals the sum over all
    /// faces and `grad(½ Σ|∇u|² h^n) = -Δ_h u · h^n` exactly.
    pub(crate) fn gradient_sq_values(&self, values: &[f64]) -> Vec<f64> {
        let inv_h2 = 1.0 / (self.h * self.h);
        self.map_cells(|idx, c| {
            let u = values[idx];
            let mut acc = 0.0;
            for axis in 0..self.ndim {
                let (m, mb) = self.neighbor(values, idx, &c, axis, -1, -1.0);
                let (p, pb) = self.neighbor(values, idx, &c, axis, 1, -1.0);
                let wm = if mb { 1.0 } else { 0.5 };
                let wp = if pb { 1.0 } else { 0.5 };
                acc += wm * (u - m).powi(2) + wp * (p - u).powi(2);
            }
            acc * inv_h2
        })
    }
}

/// A phase field `u_eps` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    eps: f64,
    values: Vec<f64>,
}

impl Field {
    /// Build a field enforcing the default resolution contract `eps >= 4h`.
    pub fn new(grid: Grid, eps: f64, values: Vec<f64>) -> Result<Self, GridError> {
        Self::with_resolution(grid, eps, values, DEFAULT_CELLS_PER_EPS)
    }

    /// Build a field with a custom resolution contract `eps >= cells_per_eps * h`
    /// (`cells_per_eps >= 1`).
    pub fn with_resolution(grid: Grid, eps: f64, values: Vec<f64>, cells_per_eps: f64) -> Result<Self, GridError> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(GridError::Eps(eps));
        }
        let min_ratio = cells_per_eps.max(1.0);
        // Relative slack so that eps = 4h computed as h = eps / 4 is accepted.
        if eps < min_ratio * grid.h() * (1.0 - 1e-9) {
            return Err(GridError::Resolution { eps, h: grid.h(), cells_per_eps: min_ratio });
        }
        if values.len() != grid.len() {
            return Err(GridError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, eps, values })
    }

    /// Field with value `f(center)` in every cell.
    pub fn from_fn<F>(grid: Grid, eps: f64, f: F) -> Result<Self, GridError>
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let values = grid.map_cells(|idx, _| f(&grid.center(idx)));
        Self::new(grid, eps, values)
    }

    pub fn constant(grid: Grid, eps: f64, c: f64) -> Result<Self, GridError> {
        let n = grid.len();
        Self::new(grid, eps, vec![c; n])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid and eps, new values. Values must be finite.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != self.grid.len() {
            return Err(GridError::Length { expected: self.grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid: self.grid.clone(), eps: self.eps, values })
    }

    /// Nearest-cell value at a point (clamped to the box).
    pub fn sample(&self, p: &Point) -> f64 {
        self.values[self.grid.locate(p)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Discrete Laplacian with ghost cells per the grid's boundary mode.
pub fn laplacian(f: &Field) -> Field {
    let values = f.grid.laplacian_values(&f.values, -1.0);
    Field { grid: f.grid.clone(), eps: f.eps, values }
}

/// Per-cell `|∇u|^2`.
pub fn gradient_sq(f: &Field) -> Vec<f64> {
    f.grid.gradient_sq_values(&f.values)
}

/// Midpoint-rule integral of per-cell values.
pub fn integrate(grid: &Grid, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.cell_volume()
}

pub const SNAPSHOT_MAGIC: &str = "WPF1";

fn header_line(f: &Field) -> String {
    let shape = f.grid.shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
    format!("{} {} {} {} {} {}\n", SNAPSHOT_MAGIC, f.grid.ndim(), shape, f.grid.h(), f.eps, f.grid.bc())
}

/// Write a `WPF1` snapshot: one ASCII header line, then little-endian `f64`
/// values, row-major with the last axis fastest. The grid origin is not part
/// of the format.
pub fn write_snapshot_to<W: Write>(f: &Field, mut w: W) -> Result<(), SnapshotError> {
    w.write_all(header_line(f).as_bytes())?;
    let mut buf = Vec::with_capacity(f.values.len() * 8);
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn write_snapshot(f: &Field, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    let file = std::fs::File::create(path)?;
    write_snapshot_to(f, std::io::BufWriter::new(file))
}

/// Parse a `WPF1` snapshot. The resolution contract is not re-checked, so any
/// field that was written can be read back.
pub fn read_snapshot_from<R: Read>(r: R) -> Result<Field, SnapshotError> {
    let mut reader = BufReader::new(r);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(SnapshotError::Header("missing header newline".into()));
    }
    line.pop();
    let text = std::str::from_utf8(&line).map_err(|_| SnapshotError::Header("header is not ASCII".into()))?;
    let tokens: Vec<&str> = text.split(' ').collect();
    match tokens.first() {
        Some(&SNAPSHOT_MAGIC) => {}
        Some(t) if t.starts_with("WPF") => return Err(SnapshotError::Version(t.to_string())),
        _ => return Err(SnapshotError::Header("missing WPF magic".into())),
    }
    let ndim: usize = tokens
        .get(1)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SnapshotError::Header("bad ndim".into()))?;
    if !(2..=3).contains(&ndim) {
        return Err(SnapshotError::Shape(format!("unsupported ndim {ndim}")));
    }
    if tokens.len() != 5 + ndim {
        return Err(SnapshotError::Header(format!("expected {} header fields, got {}", 5 + ndim, tokens.len())));
    }
    let shape = tokens[2..2 + ndim]
        .iter()
        .map(|t| t.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| SnapshotError::Header("bad shape".into()))?;
    let h: f64 = tokens[2 + ndim].parse().map_err(|_| SnapshotError::Header("bad h".into()))?;
    let eps: f64 = tokens[3 + ndim].parse().map_err(|_| SnapshotError::Header("bad eps".into()))?;
    let bc = Boundary::from_code(tokens[4 + ndim]).ok_or_else(|| SnapshotError::Header("bad boundary code".into()))?;
    let grid = Grid::with_zero_origin(&shape, h, bc).map_err(|e| SnapshotError::Shape(e.to_string()))?;
    let expected = grid.len() * 8;
    let mut payload = Vec::with_capacity(expected);
    reader.read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(SnapshotError::Truncated { expected, got: payload.len() });
    }
    if payload.len() > expected {
        return Err(SnapshotError::TrailingBytes(payload.len() - expected));
    }
    let values: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::with_resolution(grid, eps, values, 1.0).map_err(|e| SnapshotError::Shape(e.to_string()))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Field, SnapshotError> {
    read_snapshot_from(std::fs::File::open(path)?)
}
