//! Phase-field laboratory for the diffuse Willmore and Modica-Mortola
//! energies: grids and stencils, energies and their first variation,
//! recovery fields and counterexamples, gradient descent, diagnostics and
//! geodesic topological energies.

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
pub mod shapes;
pub mod topo;

pub use diagnostics::{LevelInterval, PointSet};
pub use energy::{DensityField, DensityKind, DoubleWell, EnergyReport, PenaltyConfig};
pub use flow::{FlowParams, FlowTrace};
pub use grid::{Boundary, Field, Grid, Point};
pub use shapes::{BumpSpec, Shape, SphereInsertSpec};
pub use topo::{Phase, TopoConfig};
