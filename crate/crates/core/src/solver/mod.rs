//! Monotone multigrid for the discrete obstacle problem, with projected
//! nonlinear Gauss-Seidel as smoother and as stand-alone fallback.

mod mmg;
pub mod scalar;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{evaluate_energy, NodalConvex, ObstacleProblem};
use crate::error::{Error, Result};
use crate::mesh::MeshHierarchy;

pub use mmg::coarse_correction;
pub use scalar::{scalar_convex_minimize, ScalarConvex};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    Mmg,
    PgsOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    #[default]
    LineSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Bound on the VI residual relative to the problem scale.
    pub tol: f64,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub mode: SolverMode,
    /// Relative accuracy of the one-dimensional minimizations.
    pub scalar_tol: f64,
    pub damping: Damping,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 500,
            tol: 1e-12,
            pre_smooth: 3,
            post_smooth: 3,
            mode: SolverMode::Mmg,
            scalar_tol: 1e-15,
            damping: Damping::LineSearch,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.tol > 0.0) {
            return Err(("tol", format!("must be positive, got {}", self.tol)));
        }
        if !(self.scalar_tol > 0.0) {
            return Err(("scalar_tol", format!("must be positive, got {}", self.scalar_tol)));
        }
        if self.pre_smooth == 0 {
            return Err(("pre_smooth", "must be at least 1".into()));
        }
        if self.post_smooth == 0 {
            return Err(("post_smooth", "must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(("max_iterations", "must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// VI residual in gradient units.
    pub residual: f64,
    /// `residual / (scale · max diag A)`.
    pub relative_residual: f64,
    pub scale: f64,
    /// Energy at the start and after every outer iteration.
    pub energy_history: Vec<f64>,
    /// Seconds.
    pub wall_time: f64,
    pub active_lower: usize,
    pub active_upper: usize,
    pub converged: bool,
}

/// Adapter exposing one nodal term as a scalar function.
pub(crate) struct NodeTerm<'a> {
    pub phi: &'a dyn NodalConvex,
    pub q: usize,
}

impl ScalarConvex for NodeTerm<'_> {
    fn value(&self, x: f64) -> f64 {
        self.phi.value(self.q, x)
    }
    fn deriv_left(&self, x: f64) -> f64 {
        self.phi.slopes(self.q, x).left
    }
    fn deriv_right(&self, x: f64) -> f64 {
        self.phi.slopes(self.q, x).right
    }
    fn second(&self, x: f64) -> f64 {
        self.phi.slopes(self.q, x).second
    }
    fn kinks(&self) -> Vec<f64> {
        self.phi.kinks(self.q)
    }
}

/// `max(|b|_∞ / max diag A, |v0|_∞, u_scale)`.
pub fn problem_scale(problem: &ObstacleProblem, v0: &[f64], u_scale: f64) -> f64 {
    let dmax = problem.diagonal().into_iter().fold(0.0, f64::max);
    let bmax = problem.b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let vmax = v0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let s = if dmax > 0.0 { bmax / dmax } else { 0.0 };
    s.max(vmax).max(u_scale)
}

pub fn project(problem: &ObstacleProblem, v: &mut [f64]) {
    for (q, x) in v.iter_mut().enumerate() {
        *x = x.clamp(problem.lower[q], problem.upper[q]);
    }
}

/// One lexicographic projected nonlinear Gauss-Seidel sweep.
pub fn pgs_sweep(problem: &ObstacleProblem, v: &mut [f64], scalar_tol: f64) {
    let phi = problem.phi.as_ref();
    for (q, row) in problem.a.outer_iterator().enumerate() {
        let mut diag = 0.0;
        let mut r = -problem.b[q];
        for (c, &x) in row.iter() {
            if c == q {
                diag += x;
            } else {
                r += x * v[c];
            }
        }
        let term = NodeTerm { phi, q };
        if diag > 0.0 {
            v[q] = scalar::minimize_at(diag, r, &term, problem.lower[q], problem.upper[q], v[q], scalar_tol);
        } else {
            v[q] = minimize_without_quadratic(r, &term, problem.lower[q], problem.upper[q], v[q], scalar_tol);
        }
    }
}

/// Vertices without stiffness coupling (isolated): only `φ` regularizes.
fn minimize_without_quadratic(r: f64, phi: &NodeTerm, lo: f64, hi: f64, x0: f64, tol: f64) -> f64 {
    // a tiny quadratic keeps the 1D problem coercive without moving its minimizer noticeably
    let a = f64::EPSILON * phi.second(x0).abs().max(f64::MIN_POSITIVE);
    scalar::minimize_at(a, r, phi, lo, hi, x0, tol)
}

/// Largest violation of the coordinatewise complementarity conditions.
pub fn vi_residual(problem: &ObstacleProblem, v: &[f64]) -> f64 {
    problem
        .one_sided_gradient(v)
        .into_iter()
        .enumerate()
        .map(|(q, (gl, gr))| {
            let at_lower = v[q] <= problem.lower[q];
            let at_upper = v[q] >= problem.upper[q];
            match (at_lower, at_upper) {
                (true, true) => 0.0,
                (true, false) => (-gr).max(0.0),
                (false, true) => gl.max(0.0),
                (false, false) => gl.max(-gr).max(0.0),
            }
        })
        .fold(0.0, f64::max)
}

fn active_counts(problem: &ObstacleProblem, v: &[f64]) -> (usize, usize) {
    let lower = (0..v.len()).filter(|&q| v[q] <= problem.lower[q]).count();
    let upper = (0..v.len()).filter(|&q| v[q] >= problem.upper[q]).count();
    (lower, upper)
}

/// Solve with the default problem scale (no intrinsic pressure scale).
pub fn solve(
    problem: &ObstacleProblem,
    hierarchy: &MeshHierarchy,
    v0: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    solve_scaled(problem, hierarchy, v0, cfg, 0.0)
}

/// Solve with `u_scale` entering the relative tolerance.
pub fn solve_scaled(
    problem: &ObstacleProblem,
    hierarchy: &MeshHierarchy,
    v0: &[f64],
    cfg: &SolverConfig,
    u_scale: f64,
) -> Result<(Vec<f64>, SolveReport)> {
    if v0.len() != problem.len() {
        return Err(Error::Dimension {
            expected: problem.len(),
            found: v0.len(),
        });
    }
    let start = Instant::now();
    let mut v = v0.to_vec();
    project(problem, &mut v);
    let scale = problem_scale(problem, &v, u_scale);
    let dmax = problem.diagonal().into_iter().fold(0.0, f64::max);
    let normalizer = if dmax > 0.0 { scale * dmax } else { scale };
    let relative = |res: f64| if normalizer > 0.0 { res / normalizer } else { res };

    let mut energy_history = vec![evaluate_energy(problem, &v)];
    let mut residual = vi_residual(problem, &v);
    let mut iterations = 0;
    let mut mg = match cfg.mode {
        SolverMode::Mmg => Some(mmg::Multigrid::new(hierarchy, problem.level)?),
        SolverMode::PgsOnly => None,
    };
    while relative(residual) > cfg.tol && iterations < cfg.max_iterations {
        iterations += 1;
        for _ in 0..cfg.pre_smooth {
            pgs_sweep(problem, &mut v, cfg.scalar_tol);
        }
        if let Some(mg) = mg.as_mut() {
            mg.correct(problem, &mut v, cfg.scalar_tol.sqrt() * scale);
            for _ in 0..cfg.post_smooth {
                pgs_sweep(problem, &mut v, cfg.scalar_tol);
            }
        }
        energy_history.push(evaluate_energy(problem, &v));
        residual = vi_residual(problem, &v);
    }
    let (active_lower, active_upper) = active_counts(problem, &v);
    let report = SolveReport {
        iterations,
        residual,
        relative_residual: relative(residual),
        scale,
        energy_history,
        wall_time: start.elapsed().as_secs_f64(),
        active_lower,
        active_upper,
        converged: relative(residual) <= cfg.tol,
    };
    if !report.converged {
        return Err(Error::NonConvergence {
            report: Box::new(report),
            step: None,
        });
    }
    Ok((v, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::NoNodalTerms;
    use sprs::TriMat;
    use std::sync::Arc;

    fn two_by_two() -> ObstacleProblem {
        let mut t = TriMat::new((2, 2));
        t.add_triplet(0, 0, 2.0);
        t.add_triplet(0, 1, -1.0);
        t.add_triplet(1, 0, -1.0);
        t.add_triplet(1, 1, 2.0);
        ObstacleProblem {
            a: t.to_csr(),
            b: vec![1.0, 1.0],
            phi: Arc::new(NoNodalTerms),
            lower: vec![f64::NEG_INFINITY; 2],
            upper: vec![f64::INFINITY; 2],
            level: 0,
        }
    }

    #[test]
    fn gauss_seidel_recursion() {
        let p = two_by_two();
        let mut v = vec![0.0, 0.0];
        pgs_sweep(&p, &mut v, 1e-15);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.75).abs() < 1e-15, "{v:?}");
        for _ in 0..100 {
            pgs_sweep(&p, &mut v, 1e-15);
        }
        assert!((v[0] - 1.0).abs() < 1e-13 && (v[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn residual_ignores_outward_push_at_active_bound() {
        let mut p = two_by_two();
        p.upper = vec![0.0, 0.0];
        // gradient at v = 0 is -b < 0, pushing outward through the upper bound
        assert_eq!(vi_residual(&p, &[0.0, 0.0]), 0.0);
    }
}
