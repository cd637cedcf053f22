//! Python bindings: fields, recovery constructors, energies and level-set
//! diagnostics.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use wpl_core::diagnostics::{extract_level_set, hausdorff as hausdorff_core, LevelInterval, PointSet};
use wpl_core::energy::{energy_report, first_variation, PenaltyConfig};
use wpl_core::grid::{read_snapshot, write_snapshot, Boundary, Field as CoreField, Grid, Point};
use wpl_core::shapes::{optimal_profile as profile_core, recovery_field, Shape};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn boundary(code: &str) -> PyResult<Boundary> {
    Boundary::from_code(code).ok_or_else(|| PyValueError::new_err(format!("boundary must be P, N or D, got {code:?}")))
}

fn grid(shape: Vec<usize>, h: f64, origin: Option<Vec<f64>>, bc: &str) -> PyResult<Grid> {
    let origin = origin.unwrap_or_else(|| vec![0.0; shape.len()]);
    Grid::new(&shape, h, &origin, boundary(bc)?).map_err(value_err)
}

fn point(p: &[f64]) -> PyResult<Point> {
    match p.len() {
        2 => Ok([p[0], p[1], 0.0]),
        3 => Ok([p[0], p[1], p[2]]),
        n => Err(PyValueError::new_err(format!("points need 2 or 3 coordinates, got {n}"))),
    }
}

/// A phase field on a uniform cell-centred grid.
#[pyclass(name = "Field", module = "wpl", frozen)]
struct Field {
    inner: CoreField,
}

#[pymethods]
impl Field {
    #[new]
    #[pyo3(signature = (shape, h, eps, values, bc = "N", origin = None))]
    fn new(shape: Vec<usize>, h: f64, eps: f64, values: Vec<f64>, bc: &str, origin: Option<Vec<f64>>) -> PyResult<Self> {
        let g = grid(shape, h, origin, bc)?;
        Ok(Self { inner: CoreField::new(g, eps, values).map_err(value_err)? })
    }

    /// Read a WPF1 snapshot.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: read_snapshot(path).map_err(|e| PyIOError::new_err(e.to_string()))? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        write_snapshot(&self.inner, path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.grid().shape().to_vec()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.grid().h()
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }

    #[getter]
    fn bc(&self) -> String {
        self.inner.grid().bc().code().to_string()
    }

    /// Cell values, row-major with the last axis fastest.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        format!("Field(shape={:?}, h={}, eps={}, bc={:?})", self.shape(), self.h(), self.eps(), self.bc())
    }

    /// Energy report as a dict; penalty keyword arguments match the config file.
    #[pyo3(signature = (area_weight = 0.0, lam = 0.0, target_area = 0.0, chi = 0.0, target_volume = 0.0, sigma = None))]
    fn energy<'py>(
        &self,
        py: Python<'py>,
        area_weight: f64,
        lam: f64,
        target_area: f64,
        chi: f64,
        target_volume: f64,
        sigma: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let p = PenaltyConfig { area_weight, lambda_area: lam, target_area, chi_volume: chi, target_volume, sigma, kappa: None, topo: None };
        p.validate().map_err(value_err)?;
        let r = energy_report(&self.inner, &p);
        let d = PyDict::new(py);
        for (k, v) in [
            ("S_eps", r.S_eps),
            ("W_eps", r.W_eps),
            ("total_mu", r.total_mu),
            ("total_alpha", r.total_alpha),
            ("xi_plus_total", r.xi_plus_total),
            ("xi_abs_total", r.xi_abs_total),
            ("volume_term", r.volume_term),
            ("area_term", r.area_term),
            ("penalty_area", r.penalty_area),
            ("penalty_volume", r.penalty_volume),
            ("penalty_topo", r.penalty_topo),
            ("tail", r.tail),
            ("total_E", r.total_E),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    /// `L^2` gradient of `W_eps` (no penalties).
    fn first_variation(&self) -> Vec<f64> {
        first_variation(&self.inner, &PenaltyConfig::none()).into_values()
    }

    /// Points of `u^{-1}([lo, hi])` as coordinate tuples.
    fn level_set(&self, lo: f64, hi: f64) -> PyResult<Vec<Vec<f64>>> {
        let i = LevelInterval::new(lo, hi).map_err(value_err)?;
        let n = self.inner.grid().ndim();
        Ok(extract_level_set(&self.inner, i).points.iter().map(|p| p[..n].to_vec()).collect())
    }
}

/// Recovery field of a sphere (3 coordinates) or circle (2 coordinates).
#[pyfunction]
#[pyo3(signature = (shape, h, eps, center, radius, bc = "N", origin = None))]
fn recovery_ball(shape: Vec<usize>, h: f64, eps: f64, center: Vec<f64>, radius: f64, bc: &str, origin: Option<Vec<f64>>) -> PyResult<Field> {
    let g = grid(shape, h, origin, bc)?;
    let s = match center.len() {
        2 => Shape::circle([center[0], center[1]], radius),
        3 => Shape::sphere([center[0], center[1], center[2]], radius),
        n => return Err(PyValueError::new_err(format!("center needs 2 or 3 coordinates, got {n}"))),
    };
    Ok(Field { inner: recovery_field(&s, &g, eps).map_err(value_err)? })
}

#[pyfunction]
fn optimal_profile(t: f64, eps: f64) -> f64 {
    profile_core(t, eps)
}

/// Hausdorff distance between two point lists.
#[pyfunction]
fn hausdorff(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let set = |v: Vec<Vec<f64>>, label: &str| -> PyResult<PointSet> { Ok(PointSet::new(label, v.iter().map(|p| point(p)).collect::<PyResult<_>>()?)) };
    hausdorff_core(&set(a, "a")?, &set(b, "b")?).map_err(value_err)
}

#[pymodule]
fn wpl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Field>()?;
    m.add_function(wrap_pyfunction!(recovery_ball, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_profile, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add("C0", wpl_core::energy::C0)?;
    Ok(())
}
