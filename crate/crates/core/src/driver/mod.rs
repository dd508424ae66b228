//! Configuration, the coupled time loop and file output.

pub mod config;
pub mod output;
pub mod sim;

pub use config::{load_config, parse_config, Coupling, FieldInit, Geometry, Initial, OutputConfig, SimConfig, TimeConfig};
pub use output::{fmt_g17, write_bounds_csv, write_surface_csv, write_vtk};
pub use sim::{init_state, Ledger, RunReport, SimState, Simulation, StepRecord};
