//! Unsaturated groundwater flow in Kirchhoff-transformed form, coupled to
//! surface ponding on the infiltration boundary and to seepage faces on the
//! outflow boundary.
//!
//! Each implicit time step is a convex minimization problem over a box
//! constrained set of P1 finite-element functions. It is solved by monotone
//! multigrid (projected nonlinear Gauss-Seidel plus truncated, line-searched
//! coarse corrections). The surface water heights are advanced explicitly.

pub mod assembly;
pub mod cli;
pub mod driver;
mod error;
pub mod hydraulics;
pub mod mesh;
pub mod solver;
pub mod surface;

pub use error::{Error, Result};
pub use hydraulics::{psi_factor, Hydraulics, RetentionModel, RhoGConvention, SoilParams, SourceLaw};
pub use mesh::{BoundarySpec, BoundaryTag, Mesh, MeshHierarchy, TraceGrid};
pub use assembly::{NodalField, ObstacleProblem};
pub use solver::{SolveReport, SolverConfig, SolverMode};
pub use surface::{RainSpec, SurfaceField};
