//! Hydraulic functions of the soil: retention and permeability laws, the
//! Kirchhoff transform and its inverse, the infiltration boundary operator and
//! the convex primitives entering the discrete energy.

mod assumptions;
mod model;
pub mod quadrature;
mod transform;

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assumptions::{AssumptionReport, InequalityCheck};
pub use model::{RetentionModel, PA_PER_CM_HEAD};
pub use transform::{KrRegularization, StateAt};

use transform::{BrooksCoreyClosed, KirchhoffTable, Saturation, Transform};

const MIN_PRESSURE_GUARD: f64 = 1e-11;

/// How `ρ g` enters the conversion between pressure and head.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoGConvention {
    /// `ρ g` with the configured density.
    Physical,
    /// `g` alone, as if `ρ = 1`.
    #[default]
    PaperNormalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoilParams {
    pub model: RetentionModel,
    /// Absolute permeability [m²].
    pub k: f64,
    /// Dynamic viscosity [Pa s].
    pub mu: f64,
    /// Porosity.
    pub n: f64,
    /// Water density [kg/m³].
    pub rho: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Permeability regularization; `0` leaves the law untouched.
    pub delta: f64,
    pub kr_regularization: KrRegularization,
    pub rho_g_convention: RhoGConvention,
}

impl SoilParams {
    /// The sand of the seepage-face example.
    pub fn sand() -> Self {
        SoilParams {
            model: RetentionModel::BrooksCorey {
                p_b: -712.2,
                lambda: 0.694,
            },
            k: 6.66e-9,
            mu: 1.002e-3,
            n: 0.437,
            rho: 1000.0,
            g: 9.81,
            s_min: 0.0458,
            s_max: 1.0,
            delta: 0.0,
            kr_regularization: KrRegularization::Max,
            rho_g_convention: RhoGConvention::PaperNormalized,
        }
    }

    /// Checks the parameter invariants, naming the offending field on failure.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("K", self.k)?;
        positive("mu", self.mu)?;
        positive("rho", self.rho)?;
        positive("g", self.g)?;
        if !(self.n > 0.0 && self.n <= 1.0) {
            return Err(("n", format!("must lie in (0, 1], got {}", self.n)));
        }
        if !(self.s_min >= 0.0 && self.s_min < self.s_max && self.s_max <= 1.0) {
            return Err((
                "s_m",
                format!("need 0 <= s_m < s_M <= 1, got s_m = {}, s_M = {}", self.s_min, self.s_max),
            ));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(("delta", format!("must be nonnegative, got {}", self.delta)));
        }
        self.model.validate()
    }

    /// Mobility at full saturation, `K/μ` [m²/(Pa s)].
    pub fn m0(&self) -> f64 {
        self.k / self.mu
    }

    pub fn rho_g_eff(&self) -> f64 {
        match self.rho_g_convention {
            RhoGConvention::Physical => self.rho * self.g,
            RhoGConvention::PaperNormalized => self.g,
        }
    }
}

/// Volumetric source `f(s) = f0 + f1 s` [1/s], decreasing in `s`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceLaw {
    pub f0: f64,
    pub f1: f64,
}

impl SourceLaw {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.f0.is_finite() && self.f1.is_finite()) {
            return Err(("f0", "coefficients must be finite".into()));
        }
        if self.f1 > 0.0 {
            return Err(("f1", format!("must be nonpositive, got {}", self.f1)));
        }
        if self.f0 < 0.0 {
            return Err(("f0", format!("f(0) = {} must be nonnegative", self.f0)));
        }
        if self.f0 + self.f1 > 0.0 {
            return Err(("f1", format!("f(1) = {} must be nonpositive", self.f0 + self.f1)));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.f0 + self.f1 * s
    }

    pub fn is_zero(&self) -> bool {
        self.f0 == 0.0 && self.f1 == 0.0
    }
}

/// `min{1, (w/σ)₊}`.
#[inline]
pub fn psi_factor(w: f64, sigma: f64) -> f64 {
    (w / sigma).clamp(0.0, 1.0)
}

/// Soil parameters together with the precomputed Kirchhoff transform.
///
/// Immutable after construction apart from the clamp diagnostic counter.
#[derive(Debug)]
pub struct Hydraulics {
    params: SoilParams,
    transform: Transform,
    m0: f64,
    rho_g: f64,
    kr_floor: f64,
    clamped: AtomicUsize,
}

impl Clone for Hydraulics {
    fn clone(&self) -> Self {
        Hydraulics {
            params: self.params.clone(),
            transform: self.transform.clone(),
            m0: self.m0,
            rho_g: self.rho_g,
            kr_floor: self.kr_floor,
            clamped: AtomicUsize::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl Hydraulics {
    pub fn new(params: SoilParams) -> Result<Self> {
        params
            .validate()
            .map_err(|(field, reason)| Error::Domain(format!("{field}: {reason}")))?;
        let m0 = params.m0();
        let sat = Saturation {
            s_min: params.s_min,
            s_max: params.s_max,
        };
        let d2 = params.delta * params.delta;
        let transform = match (params.model, params.delta > 0.0) {
            (RetentionModel::BrooksCorey { p_b, lambda }, false) => {
                Transform::BrooksCorey(BrooksCoreyClosed::new(p_b, lambda, m0, sat))
            }
            (model, regularized) => {
                let reg = regularized.then_some((params.kr_regularization, d2));
                Transform::Table(Box::new(KirchhoffTable::new(model, sat, m0, reg)))
            }
        };
        Ok(Hydraulics {
            rho_g: params.rho_g_eff(),
            kr_floor: d2,
            params,
            transform,
            m0,
            clamped: AtomicUsize::new(0),
        })
    }

    /// Same soil with permeability floored at `δ²` (max variant).
    pub fn regularize(&self, delta: f64) -> Result<Self> {
        self.regularize_with(delta, KrRegularization::Max)
    }

    pub fn regularize_with(&self, delta: f64, kind: KrRegularization) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("regularization parameter must be positive, got {delta}")));
        }
        let mut params = self.params.clone();
        params.delta = delta;
        params.kr_regularization = kind;
        Hydraulics::new(params)
    }

    pub fn params(&self) -> &SoilParams {
        &self.params
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn rho_g_eff(&self) -> f64 {
        self.rho_g
    }

    pub fn is_regularized(&self) -> bool {
        self.params.delta > 0.0
    }

    /// Minimal generalized pressure; `-∞` when the transform is unbounded below.
    pub fn u_min(&self) -> f64 {
        self.transform.u_min()
    }

    /// Generalized pressures where second derivatives of the nodal terms jump.
    pub fn kinks(&self) -> [f64; 2] {
        self.transform.kinks()
    }

    /// Number of saturations clamped into `[s_m, s_M]` so far.
    pub fn clamp_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    pub fn saturation_from_pressure(&self, p: f64) -> f64 {
        let SoilParams { s_min, s_max, .. } = self.params;
        s_min + (s_max - s_min) * self.params.model.eff_sat(p)
    }

    pub fn pressure_from_saturation(&self, s: f64) -> Result<f64> {
        let SoilParams { s_min, s_max, .. } = self.params;
        if s <= s_min {
            return Err(Error::DegenerateSaturation(s));
        }
        if s > s_max || s.is_nan() {
            return Err(Error::Domain(format!("saturation {s} exceeds the maximal saturation {s_max}")));
        }
        if s == s_max {
            return Ok(self.params.model.saturated_pressure());
        }
        Ok(self.params.model.pressure_of_eff_sat((s - s_min) / (s_max - s_min)))
    }

    /// Relative permeability `k_δ(s)/K`, clamping `s` into `[s_m, s_M]`.
    pub fn rel_perm(&self, s: f64) -> f64 {
        let SoilParams { s_min, s_max, .. } = self.params;
        let theta = if s < s_min || s > s_max || s.is_nan() {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            if s > s_max {
                1.0
            } else {
                0.0
            }
        } else {
            (s - s_min) / (s_max - s_min)
        };
        self.regularized_kr(self.params.model.kr_of_eff_sat(theta))
    }

    #[inline]
    fn regularized_kr(&self, kr: f64) -> f64 {
        if self.params.delta == 0.0 {
            return kr;
        }
        match self.params.kr_regularization {
            KrRegularization::Max => kr.max(self.kr_floor),
            KrRegularization::Additive => kr + self.kr_floor,
        }
    }

    /// Mobility `K k_δ(s) / μ`.
    pub fn mobility(&self, s: f64) -> f64 {
        self.m0 * self.rel_perm(s)
    }

    pub fn kirchhoff(&self, p: f64) -> f64 {
        self.transform.kirchhoff(p)
    }

    /// Inverse transform. Generalized pressures within `1e-11 |u_min|` of a
    /// finite `u_min` are rejected: there the pressure is not resolved.
    pub fn inv_kirchhoff(&self, u: f64) -> Result<f64> {
        let u_min = self.u_min();
        if u <= u_min + MIN_PRESSURE_GUARD * u_min.abs() || u.is_nan() {
            return Err(Error::BelowMinimalPressure { u, u_min });
        }
        let p = self.transform.pressure(u);
        if p == f64::NEG_INFINITY {
            return Err(Error::BelowMinimalPressure { u, u_min });
        }
        Ok(p)
    }

    /// `-p(min(u, 0))`, the suction carried by the negative part of `u`.
    pub fn h_neg(&self, u: f64) -> Result<f64> {
        Ok(-self.inv_kirchhoff(u.min(0.0))?)
    }

    /// Pressure head [m] of a generalized pressure.
    pub fn head(&self, u: f64) -> Result<f64> {
        Ok(self.inv_kirchhoff(u)? / self.rho_g)
    }

    /// Saturation, pressure and their `u`-derivatives at `u`.
    ///
    /// Total: at or below `u_min` the pressure is `-∞` and the saturation `s_m`.
    #[inline]
    pub fn state_at(&self, u: f64) -> StateAt {
        self.transform.state_at(u)
    }

    pub fn saturation_from_u(&self, u: f64) -> f64 {
        self.state_at(u).saturation
    }

    /// Infiltration flux density `(head(u)₊ + head(u)₋ ψ(w))/c` [m/s].
    pub fn kappa_star(&self, u: f64, w: f64, c: f64, sigma: f64) -> Result<f64> {
        if u >= 0.0 {
            return Ok(self.head(u)? / c);
        }
        let psi = psi_factor(w, sigma);
        if psi == 0.0 {
            return Ok(0.0);
        }
        Ok(psi * self.head(u)? / c)
    }

    /// `κ*` from an already evaluated pressure.
    #[inline]
    pub(crate) fn kappa_star_of_pressure(&self, u: f64, p: f64, psi: f64, c: f64) -> f64 {
        if u >= 0.0 {
            p / (self.rho_g * c)
        } else if psi == 0.0 {
            0.0
        } else {
            psi * p / (self.rho_g * c)
        }
    }

    /// Finite anchor of the domain primitive.
    pub fn primitive_reference(&self) -> f64 {
        let cap = match self.params.model {
            RetentionModel::BrooksCorey { p_b, lambda } => {
                10.0 * self.m0 * p_b.abs() * (3.0 * lambda + 2.0) / (3.0 * lambda + 1.0)
            }
            RetentionModel::VanGenuchten { alpha, .. } => 10.0 * self.m0 / alpha,
        };
        self.u_min().max(-cap)
    }

    /// `∫ s du` with an implementation-defined anchor.
    pub(crate) fn sat_primitive(&self, u: f64) -> f64 {
        self.transform.sat_primitive(u)
    }

    /// `∫_0^u p dζ`.
    pub(crate) fn pressure_primitive(&self, u: f64) -> f64 {
        self.transform.pressure_primitive(u)
    }

    /// `Ψ_x(v) = ∫_ref^v n s(ζ) - τ f(s(ζ)) dζ`.
    pub fn primitive_domain(&self, v: f64, tau: f64, f: &SourceLaw) -> Result<f64> {
        if v < self.u_min() || v.is_nan() {
            return Err(Error::Domain(format!("generalized pressure {v} below {}", self.u_min())));
        }
        let reference = self.primitive_reference();
        let dg = self.sat_primitive(v) - self.sat_primitive(reference);
        Ok(self.params.n * dg - tau * (f.f0 * (v - reference) + f.f1 * dg))
    }

    /// `Ψ_ξ(v) = τ ∫_0^v κ*(ζ, w) dζ`.
    pub fn primitive_boundary(&self, v: f64, w: f64, tau: f64, c: f64, sigma: f64) -> Result<f64> {
        if v < self.u_min() || v.is_nan() {
            return Err(Error::BelowMinimalPressure { u: v, u_min: self.u_min() });
        }
        let factor = if v >= 0.0 { 1.0 } else { psi_factor(w, sigma) };
        if factor == 0.0 {
            return Ok(0.0);
        }
        Ok(tau * factor * self.pressure_primitive(v) / (c * self.rho_g))
    }

    /// Checks the structural inequalities on the coefficient functions.
    pub fn verify_assumptions(&self, grid_size: usize) -> AssumptionReport {
        assumptions::verify(self, grid_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sand() -> Hydraulics {
        Hydraulics::new(SoilParams::sand()).unwrap()
    }

    #[test]
    fn sand_anchor_values() {
        let h = sand();
        assert!((h.saturation_from_pressure(-2e4) - 0.1401).abs() < 5e-5);
        let ratio = h.u_min() / (h.m0() * -712.2);
        assert!((ratio - 1.32446).abs() < 1e-4, "{ratio}");
        assert_eq!(h.kirchhoff(0.0), 0.0);
        assert_eq!(h.saturation_from_pressure(-712.2), 1.0);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let h = sand();
        let m0 = h.m0();
        let model = h.params().model;
        for &p in &[-800.0, -5e3, -1e5] {
            let q = quadrature::integrate(|q| m0 * model.kr_of_pressure(q), p, 0.0, 1e-30, 1e-14);
            let u = h.kirchhoff(p);
            assert!((u + q).abs() <= 1e-11 * q, "{p}: {u} vs {}", -q);
        }
    }

    #[test]
    fn inverse_rejects_minimal_pressure() {
        let h = sand();
        let u = h.u_min() * (1.0 - 1e-12);
        assert!(matches!(h.inv_kirchhoff(u), Err(Error::BelowMinimalPressure { .. })));
        assert!(h.inv_kirchhoff(h.u_min() * 0.999).is_ok());
    }

    #[test]
    fn state_derivatives_match_finite_differences() {
        let h = sand();
        for &u in &[h.u_min() * 0.9, h.m0() * -900.0, h.m0() * -100.0] {
            let st = h.state_at(u);
            let e = 1e-7 * u.abs();
            let sp = h.state_at(u + e);
            let sm = h.state_at(u - e);
            let ds = (sp.saturation - sm.saturation) / (2.0 * e);
            let dp = (sp.pressure - sm.pressure) / (2.0 * e);
            assert!((ds - st.dsat_du).abs() < 1e-5 * st.dsat_du.abs().max(1e-30), "{u}");
            assert!((dp - st.dpressure_du).abs() < 1e-5 * st.dpressure_du.abs(), "{u}");
        }
    }

    #[test]
    fn primitives_differentiate_to_integrands() {
        for h in [sand(), sand().regularize(0.1).unwrap()] {
            let tau = 100.0;
            let f = SourceLaw { f0: 1e-6, f1: -2e-6 };
            for &v in &[-h.m0(), h.m0() * -900.0, h.m0() * 50.0] {
                let e = 1e-6 * v.abs();
                let fd = (h.primitive_domain(v + e, tau, &f).unwrap() - h.primitive_domain(v - e, tau, &f).unwrap())
                    / (2.0 * e);
                let s = h.saturation_from_u(v);
                let exact = h.params().n * s - tau * f.eval(s);
                assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{v}: {fd} vs {exact}");

                let fd = (h.primitive_boundary(v + e, 0.01, tau, 1e5, 0.02).unwrap()
                    - h.primitive_boundary(v - e, 0.01, tau, 1e5, 0.02).unwrap())
                    / (2.0 * e);
                let exact = tau * h.kappa_star(v, 0.01, 1e5, 0.02).unwrap();
                assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{v}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn regularized_transform_is_unbounded_below() {
        let h = sand().regularize(0.1_f64.sqrt()).unwrap();
        assert_eq!(h.u_min(), f64::NEG_INFINITY);
        assert!((h.rel_perm(0.0458) - 0.1).abs() < 1e-15);
        assert_eq!(h.rel_perm(1.0), 1.0);
        let u = h.kirchhoff(-1e7);
        let p = h.inv_kirchhoff(u).unwrap();
        assert!((p + 1e7).abs() < 1e-6 * 1e7);
    }

    #[test]
    fn clamping_is_counted() {
        let h = sand();
        assert_eq!(h.rel_perm(0.0), 0.0);
        assert_eq!(h.rel_perm(1.5), 1.0);
        assert_eq!(h.clamp_count(), 2);
    }

    #[test]
    fn source_law_validation() {
        assert!(SourceLaw { f0: 0.0, f1: 0.0 }.validate().is_ok());
        assert!(SourceLaw { f0: 1.0, f1: -2.0 }.validate().is_ok());
        assert!(SourceLaw { f0: 1.0, f1: 0.0 }.validate().is_err());
        assert!(SourceLaw { f0: -1.0, f1: 0.0 }.validate().is_err());
    }
}
