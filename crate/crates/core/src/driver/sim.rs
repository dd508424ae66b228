//! The coupled time loop: implicit subsurface solve followed by an explicit
//! surface-water update.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{MassBalance, NodalField, SpatialOperator, StepParams};
use crate::error::{Error, Result};
use crate::hydraulics::Hydraulics;
use crate::mesh::{BoundarySpec, Mesh, MeshHierarchy, TraceGrid};
use crate::solver::{solve_scaled, SolveReport};
use crate::surface::{cfl_bound, positivity_step_bound, update_surface, PositivityBound, SurfaceField};

use super::config::{FieldInit, SimConfig};
use super::output::{self, CsvSink};

/// Cumulative water budget since `t = 0`, all terms in m².
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub storage_change: f64,
    pub infiltration: f64,
    pub source: f64,
    pub outflow: f64,
    pub rain: f64,
    pub surface_change: f64,
    /// Sum of the signed per-step subsurface residuals.
    pub residual: f64,
    pub max_abs_step_residual: f64,
}

impl Ledger {
    /// Subsurface plus surface storage change minus everything that entered.
    pub fn total_imbalance(&self) -> f64 {
        self.storage_change + self.surface_change - self.rain - self.source + self.outflow
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub n: usize,
    pub t: f64,
    pub u: NodalField,
    pub w: SurfaceField,
    pub ledger: Ledger,
    /// Lowest surface height seen so far.
    pub min_w: f64,
}

/// Diagnostics of one time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Index of the state produced by the step.
    pub n: usize,
    pub t: f64,
    pub tau: f64,
    pub solve: SolveReport,
    pub balance: MassBalance,
    pub rain_volume: f64,
    pub surface_change: f64,
    /// Evaluated with the new pressure and the rain used in the update.
    pub positivity: PositivityBound,
    pub cfl: f64,
    pub min_w: f64,
    pub min_s: f64,
}

impl StepRecord {
    pub fn violates_positivity_bound(&self) -> bool {
        self.tau > self.positivity.tau_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub steps: usize,
    pub t_final: f64,
    pub mesh_size: f64,
    pub cfl_bound: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Lowest surface height over the whole run.
    pub min_w_watermark: f64,
    /// Largest over all steps of the minimal nodal saturation.
    pub max_min_saturation: f64,
    /// First step whose minimal nodal saturation reaches 0.99.
    pub first_saturated_step: Option<usize>,
    /// Steps with `τ > min{c, θ₁, θ₂}`.
    pub bound_violations: usize,
    pub total_iterations: usize,
    pub ledger: Ledger,
}

/// A configured problem: mesh hierarchy, soil and reusable operators.
pub struct Simulation {
    pub cfg: SimConfig,
    pub hierarchy: MeshHierarchy,
    pub hyd: Arc<Hydraulics>,
    op: SpatialOperator,
    u_scale: f64,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.geometry;
        let hierarchy = MeshHierarchy::build_rect(
            g.lx,
            g.ly,
            g.nx0,
            g.ny0,
            g.levels,
            &BoundarySpec::new(g.out_intervals.clone()),
        )?;
        let hyd = Arc::new(Hydraulics::new(cfg.soil.clone())?);
        let op = SpatialOperator::new(hierarchy.finest())?;
        let u_scale = hyd.m0() * cfg.soil.model.pressure_scale();
        Ok(Simulation {
            cfg,
            hierarchy,
            hyd,
            op,
            u_scale,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.hierarchy.finest()
    }

    pub fn trace(&self) -> &TraceGrid {
        &self.op.trace
    }

    pub fn step_params(&self) -> StepParams {
        StepParams {
            tau: self.cfg.time.tau,
            c: self.cfg.coupling.c,
            sigma: self.cfg.coupling.sigma,
            source: self.cfg.source,
            upwind: self.cfg.upwind,
        }
    }

    pub fn cfl(&self) -> f64 {
        cfl_bound(self.mesh().mesh_size(), &self.hyd)
    }

    pub fn init_state(&self) -> Result<SimState> {
        init_state(&self.cfg, &self.hierarchy, &self.hyd)
    }

    /// Advances `state` by one step.
    pub fn time_step(&self, state: &SimState) -> Result<(SimState, StepRecord)> {
        let n1 = state.n + 1;
        self.step_inner(state).map_err(|e| e.at_step(n1))
    }

    fn step_inner(&self, state: &SimState) -> Result<(SimState, StepRecord)> {
        let mesh = self.mesh();
        let step = self.step_params();
        let tau = step.tau;
        let n1 = state.n + 1;
        let t1 = n1 as f64 * tau;

        let problem = self.op.assemble(mesh, &state.u, &state.w, &step, &self.hyd)?;
        let (u1, solve) = solve_scaled(&problem, &self.hierarchy, &state.u.values, &self.cfg.solver, self.u_scale)?;
        let balance = self.op.mass_balance(&problem, &state.u.values, &u1, &state.w, &step, &self.hyd);

        let trace = &self.op.trace;
        let u_trace: Vec<f64> = trace.nodes.iter().map(|&q| u1[q]).collect();
        let r = SurfaceField::new(self.cfg.rain.cell_rates_over(trace, state.t, t1), state.w.level);
        let positivity = positivity_step_bound(&u_trace, &r.values, step.c, step.sigma, &self.hyd)?;
        let w1 = update_surface(&state.w, &u_trace, &r, tau, step.c, step.sigma, &self.hyd)?;

        let rain_volume: f64 = tau * trace.weights.iter().zip(&r.values).map(|(h, x)| h * x).sum::<f64>();
        let surface_change: f64 = trace
            .weights
            .iter()
            .zip(w1.values.iter().zip(&state.w.values))
            .map(|(h, (a, b))| h * (a - b))
            .sum();

        let mut ledger = state.ledger.clone();
        ledger.storage_change += balance.storage_change;
        ledger.infiltration += balance.infiltration;
        ledger.source += balance.source;
        ledger.outflow += balance.outflow;
        ledger.rain += rain_volume;
        ledger.surface_change += surface_change;
        ledger.residual += balance.residual;
        ledger.max_abs_step_residual = ledger.max_abs_step_residual.max(balance.residual.abs());

        let step_min_w = w1.min();
        let min_s = u1
            .iter()
            .map(|&u| self.hyd.state_at(u).saturation)
            .fold(f64::INFINITY, f64::min);
        let next = SimState {
            n: n1,
            t: t1,
            u: NodalField::new(u1, state.u.level),
            w: w1,
            ledger,
            min_w: state.min_w.min(step_min_w),
        };
        let record = StepRecord {
            n: n1,
            t: t1,
            tau,
            solve,
            balance,
            rain_volume,
            surface_change,
            positivity,
            cfl: self.cfl(),
            min_w: step_min_w,
            min_s,
        };
        Ok((next, record))
    }

    /// Runs `⌈T/τ⌉` steps, writing outputs to `out` if given.
    pub fn run(&self, out: Option<&Path>) -> Result<RunReport> {
        self.run_with(out, |_, _| {})
    }

    /// As [`Simulation::run`], calling `observe` on the initial state and after every step.
    pub fn run_with(
        &self,
        out: Option<&Path>,
        mut observe: impl FnMut(&SimState, Option<&StepRecord>),
    ) -> Result<RunReport> {
        let mut state = self.init_state()?;
        observe(&state, None);
        let mut writer = match out {
            Some(dir) => Some(Writer::new(dir)?),
            None => None,
        };
        if let Some(w) = writer.as_mut() {
            w.snapshot(self, &state, true)?;
        }

        let steps = self.cfg.num_steps();
        let mut max_min_s = self.min_saturation(&state);
        let mut first_saturated = (max_min_s >= 0.99).then_some(0);
        let mut violations = 0;
        let mut iterations = 0;
        for _ in 0..steps {
            let (next, rec) = match self.time_step(&state) {
                Ok(x) => x,
                Err(e) => {
                    if let Some(w) = writer.as_mut() {
                        w.failure(&state, &e)?;
                    }
                    return Err(e);
                }
            };
            state = next;
            max_min_s = max_min_s.max(rec.min_s);
            if first_saturated.is_none() && rec.min_s >= 0.99 {
                first_saturated = Some(rec.n);
            }
            violations += rec.violates_positivity_bound() as usize;
            iterations += rec.solve.iterations;
            if let Some(w) = writer.as_mut() {
                w.bounds(&rec, self.cfg.coupling.c)?;
                w.snapshot(self, &state, false)?;
            }
            observe(&state, Some(&rec));
        }

        let states: Vec<_> = state.u.values.iter().map(|&u| self.hyd.state_at(u)).collect();
        let fold = |f: &dyn Fn(&crate::hydraulics::StateAt) -> f64| {
            states
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
        };
        let (p_min, p_max) = fold(&|s| s.pressure);
        let (s_min, s_max) = fold(&|s| s.saturation);
        let w_max = state.w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let report = RunReport {
            steps: state.n,
            t_final: state.t,
            mesh_size: self.mesh().mesh_size(),
            cfl_bound: self.cfl(),
            p_min,
            p_max,
            s_min,
            s_max,
            w_min: state.w.min(),
            w_max,
            min_w_watermark: state.min_w,
            max_min_saturation: max_min_s,
            first_saturated_step: first_saturated,
            bound_violations: violations,
            total_iterations: iterations,
            ledger: state.ledger.clone(),
        };
        if let Some(w) = writer.as_mut() {
            w.finish(&state, &report)?;
        }
        Ok(report)
    }

    fn min_saturation(&self, state: &SimState) -> f64 {
        state
            .u
            .values
            .iter()
            .map(|&u| self.hyd.state_at(u).saturation)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Initial state from the configured pressure and surface height.
pub fn init_state(cfg: &SimConfig, hierarchy: &MeshHierarchy, hyd: &Hydraulics) -> Result<SimState> {
    let mesh = hierarchy.finest();
    let nv = mesh.num_vertices();
    let p0 = match &cfg.initial.p0 {
        FieldInit::Constant(p) => vec![*p; nv],
        FieldInit::Values(v) if v.len() == nv => v.clone(),
        FieldInit::Values(v) => {
            return Err(Error::Dimension {
                expected: nv,
                found: v.len(),
            })
        }
    };
    let u_min = hyd.u_min();
    let u = p0
        .iter()
        .map(|&p| {
            let u = hyd.kirchhoff(p);
            if u <= u_min {
                Err(Error::BelowMinimalPressure { u, u_min })
            } else {
                Ok(u)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let trace = mesh.trace_grid()?;
    let w = match &cfg.initial.w0 {
        FieldInit::Constant(w) => SurfaceField::constant(*w, &trace, mesh.level),
        FieldInit::Values(v) if v.len() == trace.len() => SurfaceField::new(v.clone(), mesh.level),
        FieldInit::Values(v) => {
            return Err(Error::Dimension {
                expected: trace.len(),
                found: v.len(),
            })
        }
    };
    Ok(SimState {
        n: 0,
        t: 0.0,
        min_w: w.min(),
        u: NodalField::new(u, mesh.level),
        w,
        ledger: Ledger::default(),
    })
}

struct Writer {
    dir: std::path::PathBuf,
    surface: CsvSink,
    bounds: CsvSink,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            surface: CsvSink::create(&dir.join("surface.csv"), output::SURFACE_HEADER)?,
            bounds: CsvSink::create(&dir.join("bounds.csv"), output::BOUNDS_HEADER)?,
        })
    }

    fn snapshot(&mut self, sim: &Simulation, state: &SimState, initial: bool) -> Result<()> {
        let out = &sim.cfg.output;
        if initial || (out.vtk_every > 0 && state.n % out.vtk_every == 0) {
            let path = self.dir.join(format!("fields_{}.vtk", state.n));
            output::write_vtk(sim.mesh(), &state.u.values, &sim.hyd, &path)?;
        }
        if initial || (out.csv_every > 0 && state.n % out.csv_every == 0) {
            self.surface.write(&output::surface_rows(state, sim.trace()))?;
        }
        Ok(())
    }

    fn bounds(&mut self, rec: &StepRecord, c: f64) -> Result<()> {
        self.bounds.write(&output::bounds_row(rec, c))
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::io(&path, e.into()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    fn finish(&mut self, state: &SimState, report: &RunReport) -> Result<()> {
        self.surface.flush()?;
        self.bounds.flush()?;
        self.write_json("final_state.json", state)?;
        self.write_json("report.json", report)
    }

    fn failure(&mut self, state: &SimState, err: &Error) -> Result<()> {
        self.surface.flush()?;
        self.bounds.flush()?;
        #[derive(Serialize)]
        struct Failure<'a> {
            last_completed_step: usize,
            t: f64,
            error: String,
            solve: Option<&'a SolveReport>,
        }
        let solve = match err {
            Error::NonConvergence { report, .. } => Some(report.as_ref()),
            _ => None,
        };
        self.write_json(
            "failure.json",
            &Failure {
                last_completed_step: state.n,
                t: state.t,
                error: err.to_string(),
                solve,
            },
        )?;
        self.write_json("last_state.json", state)
    }
}
