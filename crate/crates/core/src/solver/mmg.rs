//! Truncated, line-searched coarse-grid correction.
//!
//! The energy is linearized at the smoothed iterate. Vertices sitting on an
//! obstacle, next to a kink of their nodal term, or with unbounded curvature
//! are removed from the linear model; the fine-grid prolongation is truncated
//! accordingly and the coarse operators are built by Galerkin products. One
//! V-cycle yields a search direction that is clipped to the obstacles and
//! damped until the energy does not increase.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use sprs::{CsMat, TriMat};

use crate::assembly::{evaluate_energy, ObstacleProblem};
use crate::error::{Error, Result};
use crate::mesh::MeshHierarchy;

const SMOOTH_STEPS: usize = 2;
const COARSEST_SWEEPS: usize = 60;
/// Coarsest systems up to this size are factorized densely.
const DIRECT_LIMIT: usize = 2000;
const LINE_SEARCH_STEPS: usize = 30;

pub(crate) struct Multigrid {
    /// `transfers[j]` maps level `j` to `j + 1`, up to the problem level.
    transfers: Vec<CsMat<f64>>,
}

impl Multigrid {
    pub fn new(hierarchy: &MeshHierarchy, level: usize) -> Result<Self> {
        if level >= hierarchy.num_levels() {
            return Err(Error::Dimension {
                expected: hierarchy.num_levels() - 1,
                found: level,
            });
        }
        Ok(Multigrid {
            transfers: hierarchy.prolongations[..level].to_vec(),
        })
    }

    /// Applies one correction in place and returns the damping factor used.
    pub fn correct(&mut self, problem: &ObstacleProblem, v: &mut [f64], kink_tol: f64) -> f64 {
        let n = v.len();
        let av = problem.apply(v);
        let mut truncated = vec![false; n];
        let mut rhs = vec![0.0; n];
        let mut curvature = vec![0.0; n];
        for q in 0..n {
            let sl = problem.phi.slopes(q, v[q]);
            let near_kink = problem.phi.kinks(q).iter().any(|&k| (v[q] - k).abs() <= kink_tol);
            if v[q] <= problem.lower[q] || v[q] >= problem.upper[q] || near_kink || !sl.second.is_finite() {
                truncated[q] = true;
            } else {
                rhs[q] = -(av[q] - problem.b[q] + sl.right);
                curvature[q] = sl.second;
            }
        }
        if truncated.iter().all(|&t| t) {
            return 0.0;
        }

        let mut fine = TriMat::with_capacity((n, n), problem.a.nnz() + n);
        for (q, row) in problem.a.outer_iterator().enumerate() {
            if truncated[q] {
                fine.add_triplet(q, q, 1.0);
                continue;
            }
            for (c, &x) in row.iter() {
                if !truncated[c] {
                    fine.add_triplet(q, c, x);
                }
            }
            fine.add_triplet(q, q, curvature[q]);
        }
        let fine: CsMat<f64> = fine.to_csr();

        let levels = self.transfers.len();
        let mut transfers = self.transfers.clone();
        if let Some(last) = transfers.last_mut() {
            *last = truncate_rows(last, &truncated);
        }
        let mut operators = vec![fine];
        for j in (0..levels).rev() {
            let p = &transfers[j];
            let pt: CsMat<f64> = p.transpose_view().to_csr();
            let finer = operators.last().expect("nonempty");
            let coarse: CsMat<f64> = &(&pt * finer) * p;
            operators.push(coarse);
        }
        operators.reverse();

        let coarse = CoarseSolver::new(&operators[0]);
        let mut d = v_cycle(&operators, &transfers, &coarse, levels, &rhs);
        for q in 0..n {
            if truncated[q] {
                d[q] = 0.0;
            }
            d[q] = d[q].clamp(problem.lower[q] - v[q], problem.upper[q] - v[q]);
        }
        if d.iter().all(|&x| x == 0.0) {
            return 0.0;
        }

        let e0 = evaluate_energy(problem, v);
        let mut theta = 1.0;
        let mut trial = vec![0.0; n];
        for _ in 0..=LINE_SEARCH_STEPS {
            for q in 0..n {
                trial[q] = (v[q] + theta * d[q]).clamp(problem.lower[q], problem.upper[q]);
            }
            if evaluate_energy(problem, &trial) <= e0 {
                v.copy_from_slice(&trial);
                return theta;
            }
            theta *= 0.5;
        }
        0.0
    }
}

fn truncate_rows(p: &CsMat<f64>, truncated: &[bool]) -> CsMat<f64> {
    let mut t = TriMat::with_capacity(p.shape(), p.nnz());
    for (row, vec) in p.outer_iterator().enumerate() {
        if truncated[row] {
            continue;
        }
        for (c, &x) in vec.iter() {
            t.add_triplet(row, c, x);
        }
    }
    t.to_csr()
}

enum CoarseSolver {
    Direct(Cholesky<f64, Dyn>),
    Sweeps,
}

impl CoarseSolver {
    fn new(h: &CsMat<f64>) -> Self {
        let n = h.rows();
        if n > DIRECT_LIMIT {
            return CoarseSolver::Sweeps;
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in h.outer_iterator().enumerate() {
            for (j, &a) in row.iter() {
                m[(i, j)] += a;
            }
        }
        // rows emptied by truncation get a unit pivot; their right-hand side is zero
        for i in 0..n {
            if m[(i, i)] <= 0.0 && m.row(i).iter().all(|&a| a == 0.0) {
                m[(i, i)] = 1.0;
            }
        }
        match Cholesky::new(m) {
            Some(c) => CoarseSolver::Direct(c),
            None => CoarseSolver::Sweeps,
        }
    }

    fn solve(&self, h: &CsMat<f64>, rhs: &[f64]) -> Vec<f64> {
        match self {
            CoarseSolver::Direct(c) => {
                let x = c.solve(&DVector::from_column_slice(rhs));
                if x.iter().all(|v| v.is_finite()) {
                    return x.as_slice().to_vec();
                }
            }
            CoarseSolver::Sweeps => {}
        }
        let mut x = vec![0.0; rhs.len()];
        for _ in 0..COARSEST_SWEEPS {
            gauss_seidel(h, rhs, &mut x, false);
            gauss_seidel(h, rhs, &mut x, true);
        }
        x
    }
}

fn v_cycle(
    operators: &[CsMat<f64>],
    transfers: &[CsMat<f64>],
    coarse: &CoarseSolver,
    level: usize,
    rhs: &[f64],
) -> Vec<f64> {
    let h = &operators[level];
    if level == 0 {
        return coarse.solve(h, rhs);
    }
    let mut x = vec![0.0; rhs.len()];
    for _ in 0..SMOOTH_STEPS {
        gauss_seidel(h, rhs, &mut x, false);
    }
    let p = &transfers[level - 1];
    let hx = mul(h, &x);
    let r: Vec<f64> = rhs.iter().zip(&hx).map(|(b, y)| b - y).collect();
    let mut rc = vec![0.0; p.cols()];
    for (row, vec) in p.outer_iterator().enumerate() {
        for (c, &w) in vec.iter() {
            rc[c] += w * r[row];
        }
    }
    let xc = v_cycle(operators, transfers, coarse, level - 1, &rc);
    for (row, vec) in p.outer_iterator().enumerate() {
        x[row] += vec.iter().map(|(c, &w)| w * xc[c]).sum::<f64>();
    }
    for _ in 0..SMOOTH_STEPS {
        gauss_seidel(h, rhs, &mut x, true);
    }
    x
}

fn mul(h: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    h.outer_iterator()
        .map(|row| row.iter().map(|(c, &a)| a * x[c]).sum())
        .collect()
}

fn gauss_seidel(h: &CsMat<f64>, rhs: &[f64], x: &mut [f64], backward: bool) {
    let n = rhs.len();
    let mut sweep = |i: usize| {
        let row = h.outer_view(i).expect("row in range");
        let mut diag = 0.0;
        let mut acc = rhs[i];
        for (c, &a) in row.iter() {
            if c == i {
                diag += a;
            } else {
                acc -= a * x[c];
            }
        }
        if diag > 0.0 {
            x[i] = acc / diag;
        }
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}

/// One truncated coarse correction of `v`; returns the damping factor applied.
pub fn coarse_correction(
    problem: &ObstacleProblem,
    v: &mut [f64],
    hierarchy: &MeshHierarchy,
    scalar_tol: f64,
) -> Result<f64> {
    let mut mg = Multigrid::new(hierarchy, problem.level)?;
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(mg.correct(problem, v, scalar_tol.sqrt() * scale))
}
