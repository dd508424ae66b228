//! Command-line front end: `run`, `bounds`, `probe`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::driver::{load_config, Simulation};
use crate::error::Error;
use crate::hydraulics::Hydraulics;
use crate::mesh::{BoundarySpec, MeshHierarchy};
use crate::surface::{cfl_bound, positivity_step_bound};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "richards", version, about = "Saturated-unsaturated groundwater flow with surface ponding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of refinements of the coarse grid.
        #[arg(long)]
        levels: Option<usize>,
        /// Time step [s].
        #[arg(long)]
        tau: Option<f64>,
        /// Final time [s].
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Print the CFL bound and the positivity bound of the initial state.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print saturation, relative permeability, generalized pressure and head at one pressure.
    Probe {
        #[arg(long)]
        config: PathBuf,
        /// Capillary pressure [Pa].
        #[arg(long, allow_hyphen_values = true)]
        pressure: f64,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Geometry(_) | Error::Domain(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `argv` (including the program name) and executes the command.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> crate::Result<()> {
    let io = |e| Error::io("<stdout>", e);
    match cmd {
        Command::Run {
            config,
            out: dir,
            levels,
            tau,
            t_end,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(j) = levels {
                cfg.geometry.levels = j;
            }
            if let Some(t) = tau {
                cfg.time.tau = t;
            }
            if let Some(t) = t_end {
                cfg.time.t_end = t;
            }
            if let Some(d) = dir {
                cfg.output.directory = Some(d);
            }
            let dir = cfg.output.directory.clone().unwrap_or_else(|| PathBuf::from("output"));
            let sim = Simulation::new(cfg)?;
            let report = sim.run(Some(&dir))?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes")).map_err(io)?;
        }
        Command::Bounds { config } => {
            let cfg = load_config(&config)?;
            let sim = Simulation::new(cfg)?;
            let h = sim.mesh().mesh_size();
            let state = sim.init_state()?;
            let trace = sim.trace();
            let u_trace: Vec<f64> = trace.nodes.iter().map(|&q| state.u.values[q]).collect();
            let r = sim.cfg.rain.cell_rates_over(trace, 0.0, sim.cfg.time.tau);
            let pos = positivity_step_bound(&u_trace, &r, sim.cfg.coupling.c, sim.cfg.coupling.sigma, &sim.hyd)?;
            writeln!(out, "h = {h} m").map_err(io)?;
            writeln!(out, "tau_cfl = {} s", cfl_bound(h, &sim.hyd)).map_err(io)?;
            writeln!(out, "theta1_min = {} s", pos.theta1_min).map_err(io)?;
            writeln!(out, "theta2_min = {} s", pos.theta2_min).map_err(io)?;
            writeln!(out, "tau_positivity = {} s", pos.tau_max).map_err(io)?;
            writeln!(out, "tau = {} s", sim.cfg.time.tau).map_err(io)?;
        }
        Command::Probe { config, pressure } => {
            let cfg = load_config(&config)?;
            // validates the geometry too, so probe fails exactly where run would
            let g = &cfg.geometry;
            MeshHierarchy::build_rect(g.lx, g.ly, g.nx0, g.ny0, 0, &BoundarySpec::new(g.out_intervals.clone()))?;
            let hyd = Hydraulics::new(cfg.soil)?;
            let s = hyd.saturation_from_pressure(pressure);
            let u = hyd.kirchhoff(pressure);
            writeln!(out, "p = {pressure} Pa").map_err(io)?;
            writeln!(out, "s = {s:.4}").map_err(io)?;
            writeln!(out, "kr = {}", hyd.rel_perm(s)).map_err(io)?;
            writeln!(out, "u = {u} m^2/s").map_err(io)?;
            writeln!(out, "head = {} m", pressure / hyd.rho_g_eff()).map_err(io)?;
        }
    }
    Ok(())
}
