//! Experiment driver for the phase-field Willmore toolkit: config parsing,
//! eps sweeps and report writing.

pub mod config;
pub mod report;
pub mod run;

use thiserror::Error;
use wpl_core::diagnostics::PointSet;
use wpl_core::energy::EnergyReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for bad configs and inputs, 2 for io and numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) => 1,
            CliError::Io(_) | CliError::Runtime(_) => 2,
        }
    }
}

impl From<wpl_core::error::SnapshotError> for CliError {
    fn from(e: wpl_core::error::SnapshotError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterCheck {
    pub diam: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Compares the diameter of an interface cloud with `(2/pi) sqrt(S W)`.
pub fn diameter_check(cloud: &PointSet, report: &EnergyReport) -> Result<DiameterCheck, CliError> {
    if cloud.is_empty() {
        return Err(CliError::Runtime(format!("diameter of empty set `{}`", cloud.label)));
    }
    let diam = cloud.diameter();
    let bound = 2.0 / std::f64::consts::PI * (report.S_eps * report.W_eps).sqrt();
    Ok(DiameterCheck { diam, bound, ok: diam <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use wpl_core::diagnostics::{extract_level_set, LevelInterval};
    use wpl_core::energy::{energy_report, PenaltyConfig};
    use wpl_core::grid::{Boundary, Grid};
    use wpl_core::shapes::{recovery_field, Shape};

    fn report(s: f64, w: f64) -> EnergyReport {
        let grid = Grid::with_zero_origin(&[8, 8], 0.125, Boundary::Periodic).unwrap();
        let f = wpl_core::grid::Field::constant(grid, 0.5, -1.0).unwrap();
        EnergyReport { S_eps: s, W_eps: w, ..energy_report(&f, &PenaltyConfig::none()) }
    }

    #[test]
    fn sphere_diameter_is_far_below_the_bound() {
        let cloud = PointSet::new("sphere", vec![[0.2, 0.5, 0.5], [0.8, 0.5, 0.5], [0.5, 0.8, 0.5]]);
        let d = diameter_check(&cloud, &report(4.0 * PI * 0.09, 16.0 * PI)).unwrap();
        assert!((d.diam - 0.6).abs() < 1e-12);
        assert!((d.bound - 2.0 / PI * (4.0 * PI * 0.09 * 16.0 * PI).sqrt()).abs() < 1e-12);
        assert!((d.bound - 4.8).abs() < 0.05 && d.ok);
    }

    #[test]
    fn two_sphere_field_passes() {
        let grid = Grid::with_zero_origin(&[72, 48, 48], 1.0 / 48.0, Boundary::NeumannReflect).unwrap();
        let shape = Shape::union(vec![([0.5, 0.5, 0.5], 0.2), ([1.0, 0.5, 0.5], 0.2)]);
        let f = recovery_field(&shape, &grid, 0.09).unwrap();
        let cloud = extract_level_set(&f, LevelInterval::new(-0.05, 0.05).unwrap());
        let d = diameter_check(&cloud, &energy_report(&f, &PenaltyConfig::none())).unwrap();
        assert!((d.diam - 0.9).abs() < 0.03, "{}", d.diam);
        assert!(d.ok);
    }

    #[test]
    fn empty_cloud_is_an_error() {
        assert!(diameter_check(&PointSet::new("none", vec![]), &report(1.0, 1.0)).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config { line: 1, key: "k".into(), msg: "m".into() }.exit_code(), 1);
        assert_eq!(CliError::Input("x".into()).exit_code(), 1);
        assert_eq!(CliError::Io("x".into()).exit_code(), 2);
        assert_eq!(CliError::Runtime("x".into()).exit_code(), 2);
    }
}
