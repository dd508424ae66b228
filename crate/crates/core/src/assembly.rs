//! The discrete convex energy of one implicit time step:
//! `F(v) = ½⟨Av, v⟩ - ⟨b, v⟩ + Σ_q φ_q(v_q)` over a box.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::hydraulics::{Hydraulics, SourceLaw};
use crate::mesh::{Mesh, TraceGrid};
use crate::surface::SurfaceField;

/// One scalar per mesh vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    pub values: Vec<f64>,
    pub level: usize,
}

impl NodalField {
    pub fn new(values: Vec<f64>, level: usize) -> Self {
        NodalField { values, level }
    }

    pub fn constant(value: f64, mesh: &Mesh) -> Self {
        NodalField {
            values: vec![value; mesh.num_vertices()],
            level: mesh.level,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.level != mesh.level {
            return Err(Error::Dimension {
                expected: mesh.level,
                found: self.level,
            });
        }
        if self.values.len() != mesh.num_vertices() {
            return Err(Error::Dimension {
                expected: mesh.num_vertices(),
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Derivative information of a convex scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slopes {
    pub left: f64,
    pub right: f64,
    /// Curvature of the right branch.
    pub second: f64,
}

/// Separable convex nodal terms `φ_q`.
pub trait NodalConvex: Send + Sync + std::fmt::Debug {
    fn value(&self, q: usize, v: f64) -> f64;
    fn slopes(&self, q: usize, v: f64) -> Slopes;
    /// Points where the slope or curvature of `φ_q` jumps.
    fn kinks(&self, q: usize) -> Vec<f64>;
}

/// `φ ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoNodalTerms;

impl NodalConvex for NoNodalTerms {
    fn value(&self, _: usize, _: f64) -> f64 {
        0.0
    }
    fn slopes(&self, _: usize, _: f64) -> Slopes {
        Slopes {
            left: 0.0,
            right: 0.0,
            second: 0.0,
        }
    }
    fn kinks(&self, _: usize) -> Vec<f64> {
        Vec::new()
    }
}

/// `φ_q(v) = h_q Ψ_x(v) + h_q^in Ψ_ξ(v; w^n_q)`.
#[derive(Clone, Debug)]
pub struct HydraulicTerms {
    hyd: Arc<Hydraulics>,
    h: Vec<f64>,
    h_in: Vec<f64>,
    psi: Vec<f64>,
    tau: f64,
    c: f64,
    source: SourceLaw,
    reference: f64,
    g_reference: f64,
}

impl HydraulicTerms {
    pub fn new(
        hyd: Arc<Hydraulics>,
        h: Vec<f64>,
        h_in: Vec<f64>,
        psi: Vec<f64>,
        tau: f64,
        c: f64,
        source: SourceLaw,
    ) -> Self {
        let reference = hyd.primitive_reference();
        let g_reference = hyd.sat_primitive(reference);
        HydraulicTerms {
            hyd,
            h,
            h_in,
            psi,
            tau,
            c,
            source,
            reference,
            g_reference,
        }
    }

    pub fn hydraulics(&self) -> &Hydraulics {
        &self.hyd
    }

    #[inline]
    fn boundary_factor(&self, q: usize, v: f64) -> f64 {
        if self.h_in[q] == 0.0 {
            0.0
        } else if v >= 0.0 {
            1.0
        } else {
            self.psi[q]
        }
    }
}

impl NodalConvex for HydraulicTerms {
    fn value(&self, q: usize, v: f64) -> f64 {
        if v < self.hyd.u_min() || v.is_nan() {
            return f64::INFINITY;
        }
        let n = self.hyd.params().n;
        let dg = self.hyd.sat_primitive(v) - self.g_reference;
        let psi_x = n * dg - self.tau * (self.source.f0 * (v - self.reference) + self.source.f1 * dg);
        let mut val = self.h[q] * psi_x;
        let factor = self.boundary_factor(q, v);
        if factor > 0.0 {
            let psi_xi = self.tau * factor * self.hyd.pressure_primitive(v) / (self.c * self.hyd.rho_g_eff());
            val += self.h_in[q] * psi_xi;
        }
        val
    }

    fn slopes(&self, q: usize, v: f64) -> Slopes {
        let st = self.hyd.state_at(v);
        let n = self.hyd.params().n;
        let s = st.saturation;
        let mut d = self.h[q] * (n * s - self.tau * self.source.eval(s));
        let mut second = self.h[q] * (n - self.tau * self.source.f1) * st.dsat_du;
        let factor = self.boundary_factor(q, v);
        if factor > 0.0 {
            let k = self.tau * factor / (self.c * self.hyd.rho_g_eff());
            d += self.h_in[q] * k * st.pressure;
            second += self.h_in[q] * k * st.dpressure_du;
        }
        Slopes {
            left: d,
            right: d,
            second,
        }
    }

    fn kinks(&self, _: usize) -> Vec<f64> {
        self.hyd.kinks().to_vec()
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleProblem {
    /// Symmetric positive semidefinite, `τ` times the stiffness matrix.
    pub a: CsMat<f64>,
    pub b: Vec<f64>,
    pub phi: Arc<dyn NodalConvex>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: usize,
}

impl ObstacleProblem {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|q| self.a.get(q, q).copied().unwrap_or(0.0)).collect()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.a
            .outer_iterator()
            .map(|row| row.iter().map(|(c, &x)| x * v[c]).sum())
            .collect()
    }

    pub fn is_admissible(&self, v: &[f64]) -> bool {
        v.len() == self.len()
            && v.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x <= hi)
    }

    /// Componentwise `(∂F/∂v_q⁻, ∂F/∂v_q⁺)`.
    pub fn one_sided_gradient(&self, v: &[f64]) -> Vec<(f64, f64)> {
        let av = self.apply(v);
        (0..self.len())
            .map(|q| {
                let sl = self.phi.slopes(q, v[q]);
                let lin = av[q] - self.b[q];
                (lin + sl.left, lin + sl.right)
            })
            .collect()
    }
}

pub fn evaluate_energy(problem: &ObstacleProblem, v: &[f64]) -> f64 {
    if !problem.is_admissible(v) {
        return f64::INFINITY;
    }
    let av = problem.apply(v);
    let mut quad = 0.0;
    let mut phi = 0.0;
    for q in 0..v.len() {
        quad += v[q] * (0.5 * av[q] - problem.b[q]);
        phi += problem.phi.value(q, v[q]);
    }
    quad + phi
}

/// P1 stiffness `S_qr = ∫ ∇λ_q · ∇λ_r`.
pub fn assemble_stiffness(mesh: &Mesh) -> CsMat<f64> {
    let locals: Vec<[[f64; 3]; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let g = mesh.barycentric_gradients(t);
            let area = mesh.area(t);
            let mut k = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
            k
        })
        .collect();
    let n = mesh.num_vertices();
    let mut tri = TriMat::with_capacity((n, n), 9 * locals.len());
    for (t, k) in locals.iter().enumerate() {
        let idx = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                tri.add_triplet(idx[i], idx[j], k[i][j]);
            }
        }
    }
    tri.to_csr()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpwindScheme {
    /// Element mobility from the highest vertex (mean over ties).
    #[default]
    #[serde(rename = "nodal_max_z")]
    NodalMaxZ,
    /// Element mobility as the mean of the vertex mobilities.
    #[serde(rename = "central")]
    Central,
}

/// `(g_vec)_q = Σ_T m_T ρ_eff g_eff ∫_T ∂_z λ_q`, without the `τ` factor.
pub fn assemble_gravity_load(mesh: &Mesh, s_n: &NodalField, hyd: &Hydraulics, upwind: UpwindScheme) -> Result<Vec<f64>> {
    s_n.check(mesh)?;
    let mobility: Vec<f64> = s_n.values.par_iter().map(|&s| hyd.mobility(s)).collect();
    Ok(gravity_from_mobility(mesh, &mobility, hyd.rho_g_eff(), upwind))
}

fn gravity_from_mobility(mesh: &Mesh, mobility: &[f64], rho_g: f64, upwind: UpwindScheme) -> Vec<f64> {
    let locals: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangles[t];
            let m = match upwind {
                UpwindScheme::Central => tri.iter().map(|&q| mobility[q]).sum::<f64>() / 3.0,
                UpwindScheme::NodalMaxZ => {
                    let z_top = tri.iter().map(|&q| mesh.vertices[q][1]).fold(f64::NEG_INFINITY, f64::max);
                    let (sum, count) = tri
                        .iter()
                        .filter(|&&q| mesh.vertices[q][1] == z_top)
                        .fold((0.0, 0usize), |(s, c), &q| (s + mobility[q], c + 1));
                    sum / count as f64
                }
            };
            let g = mesh.barycentric_gradients(t);
            let w = m * rho_g * mesh.area(t);
            [w * g[0][1], w * g[1][1], w * g[2][1]]
        })
        .collect();
    let mut out = vec![0.0; mesh.num_vertices()];
    for (t, l) in locals.iter().enumerate() {
        for (k, &q) in mesh.triangles[t].iter().enumerate() {
            out[q] += l[k];
        }
    }
    out
}

/// Time-step data entering the spatial problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepParams {
    pub tau: f64,
    pub c: f64,
    pub sigma: f64,
    pub source: SourceLaw,
    pub upwind: UpwindScheme,
}

/// Mesh quantities reused by every time step on one level.
#[derive(Clone, Debug)]
pub struct SpatialOperator {
    pub stiffness: CsMat<f64>,
    pub lumped: Vec<f64>,
    pub trace: TraceGrid,
    /// Trace weights scattered to vertices.
    pub trace_weights: Vec<f64>,
    pub out_nodes: Vec<usize>,
    pub level: usize,
}

impl SpatialOperator {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let trace = mesh.trace_grid()?;
        Ok(SpatialOperator {
            stiffness: assemble_stiffness(mesh),
            lumped: mesh.lumped_weights(),
            trace_weights: trace.nodal_weights(mesh.num_vertices()),
            trace,
            out_nodes: mesh.out_nodes(),
            level: mesh.level,
        })
    }

    pub fn assemble(
        &self,
        mesh: &Mesh,
        u_n: &NodalField,
        w_n: &SurfaceField,
        step: &StepParams,
        hyd: &Arc<Hydraulics>,
    ) -> Result<ObstacleProblem> {
        u_n.check(mesh)?;
        if mesh.level != self.level {
            return Err(Error::Dimension {
                expected: self.level,
                found: mesh.level,
            });
        }
        w_n.check(&self.trace, mesh.level)?;
        let nv = mesh.num_vertices();
        let n = hyd.params().n;

        let states: Vec<(f64, f64)> = u_n
            .values
            .par_iter()
            .map(|&u| {
                let s = hyd.state_at(u).saturation;
                (s, hyd.mobility(s))
            })
            .collect();
        let mobility: Vec<f64> = states.iter().map(|x| x.1).collect();
        let gvec = gravity_from_mobility(mesh, &mobility, hyd.rho_g_eff(), step.upwind);

        let mut b: Vec<f64> = (0..nv)
            .map(|q| self.lumped[q] * n * states[q].0 - step.tau * gvec[q])
            .collect();
        let mut psi = vec![0.0; nv];
        for (k, &q) in self.trace.nodes.iter().enumerate() {
            let w = w_n.values[k];
            b[q] += step.tau * self.trace.weights[k] * w / step.c;
            psi[q] = crate::hydraulics::psi_factor(w, step.sigma);
        }

        let mut a = self.stiffness.clone();
        a.map_inplace(|&x| step.tau * x);

        let mut upper = vec![f64::INFINITY; nv];
        for &q in &self.out_nodes {
            upper[q] = 0.0;
        }
        let phi = HydraulicTerms::new(
            Arc::clone(hyd),
            self.lumped.clone(),
            self.trace_weights.clone(),
            psi,
            step.tau,
            step.c,
            step.source,
        );
        Ok(ObstacleProblem {
            a,
            b,
            phi: Arc::new(phi),
            lower: vec![hyd.u_min(); nv],
            upper,
            level: mesh.level,
        })
    }
}

/// One-shot assembly of the spatial problem on `mesh`.
pub fn assemble_spatial_problem(
    mesh: &Mesh,
    u_n: &NodalField,
    w_n: &SurfaceField,
    step: &StepParams,
    hyd: &Arc<Hydraulics>,
) -> Result<ObstacleProblem> {
    SpatialOperator::new(mesh)?.assemble(mesh, u_n, w_n, step, hyd)
}

/// Water balance of one step, all terms in m² (volume per unit depth).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MassBalance {
    /// `Σ h_q n (s^{n+1}_q - s^n_q)`.
    pub storage_change: f64,
    /// `τ Σ h_q^in (w^n_q/c - κ*(u^{n+1}_q, w^n_q))`.
    pub infiltration: f64,
    /// `τ Σ h_q f(s^{n+1}_q)`.
    pub source: f64,
    /// Water leaving through active seepage nodes, from the VI residual.
    pub outflow: f64,
    /// `storage_change - infiltration - source + outflow`.
    pub residual: f64,
}

impl SpatialOperator {
    pub fn mass_balance(
        &self,
        problem: &ObstacleProblem,
        u_n: &[f64],
        u_np1: &[f64],
        w_n: &SurfaceField,
        step: &StepParams,
        hyd: &Hydraulics,
    ) -> MassBalance {
        let n = hyd.params().n;
        let mut storage_change = 0.0;
        let mut source = 0.0;
        for q in 0..u_n.len() {
            let s1 = hyd.state_at(u_np1[q]).saturation;
            let s0 = hyd.state_at(u_n[q]).saturation;
            storage_change += self.lumped[q] * n * (s1 - s0);
            source += step.tau * self.lumped[q] * step.source.eval(s1);
        }
        let mut infiltration = 0.0;
        for (k, &q) in self.trace.nodes.iter().enumerate() {
            let w = w_n.values[k];
            let u = u_np1[q];
            let st = hyd.state_at(u);
            let psi = crate::hydraulics::psi_factor(w, step.sigma);
            let kappa = hyd.kappa_star_of_pressure(u, st.pressure, psi, step.c);
            infiltration += step.tau * self.trace.weights[k] * (w / step.c - kappa);
        }
        let grad = problem.one_sided_gradient(u_np1);
        let outflow: f64 = (0..u_np1.len())
            .filter(|&q| u_np1[q] >= problem.upper[q])
            .map(|q| -grad[q].0)
            .sum();
        MassBalance {
            storage_change,
            infiltration,
            source,
            outflow,
            residual: storage_change - infiltration - source + outflow,
        }
    }
}
