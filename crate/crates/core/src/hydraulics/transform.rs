//! Kirchhoff transform representations: closed form for unregularized
//! Brooks-Corey, and a quadrature-backed table for everything else.
//!
//! Both expose the same four functions of the generalized pressure `u`:
//! the pressure `p(u)`, its derivative, and the primitives `∫ s du` and
//! `∫_0^u p dζ`.

use super::model::RetentionModel;
use super::quadrature;

/// Pointwise state at one generalized pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateAt {
    pub saturation: f64,
    pub dsat_du: f64,
    pub pressure: f64,
    pub dpressure_du: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrRegularization {
    /// `k_δ(s) = max(k(s), δ²K)`.
    Max,
    /// `k_δ(s) = k(s) + δ²K`.
    Additive,
}

#[derive(Clone, Debug)]
pub(crate) struct Saturation {
    pub s_min: f64,
    pub s_max: f64,
}

impl Saturation {
    #[inline]
    fn of_eff(&self, theta: f64) -> f64 {
        self.s_min + (self.s_max - self.s_min) * theta
    }
    #[inline]
    fn span(&self) -> f64 {
        self.s_max - self.s_min
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Transform {
    BrooksCorey(BrooksCoreyClosed),
    Table(Box<KirchhoffTable>),
}

impl Transform {
    pub fn kirchhoff(&self, p: f64) -> f64 {
        match self {
            Transform::BrooksCorey(bc) => bc.kirchhoff(p),
            Transform::Table(t) => t.kirchhoff(p),
        }
    }
    /// Pressure of `u`; `-∞` at or below the minimal generalized pressure.
    pub fn pressure(&self, u: f64) -> f64 {
        match self {
            Transform::BrooksCorey(bc) => bc.pressure(u),
            Transform::Table(t) => t.pressure(u),
        }
    }
    pub fn state_at(&self, u: f64) -> StateAt {
        match self {
            Transform::BrooksCorey(bc) => bc.state_at(u),
            Transform::Table(t) => t.state_at(u),
        }
    }
    /// `∫ s du` up to an additive constant fixed per transform.
    pub fn sat_primitive(&self, u: f64) -> f64 {
        match self {
            Transform::BrooksCorey(bc) => bc.sat_primitive(u),
            Transform::Table(t) => t.sat_primitive(u),
        }
    }
    /// `∫_0^u p dζ`, nonnegative.
    pub fn pressure_primitive(&self, u: f64) -> f64 {
        match self {
            Transform::BrooksCorey(bc) => bc.pressure_primitive(u),
            Transform::Table(t) => t.pressure_primitive(u),
        }
    }
    pub fn u_min(&self) -> f64 {
        match self {
            Transform::BrooksCorey(bc) => bc.u_min,
            Transform::Table(t) => t.u_min,
        }
    }
    /// Generalized pressures where `s(u)` or `p(u)` change slope abruptly.
    pub fn kinks(&self) -> [f64; 2] {
        match self {
            Transform::BrooksCorey(bc) => [bc.u_b, 0.0],
            Transform::Table(t) => [t.u_sat, 0.0],
        }
    }
}

/// Unregularized Brooks-Corey in closed form.
///
/// With `a = 3λ + 2` and the scaled distance to the minimal generalized
/// pressure `t = 1 + (u - M0 p_b)(a - 1)/(M0 |p_b|) ∈ (0, 1]`, the
/// unsaturated branch reads `p = p_b t^{-1/(a-1)}`, `θ = t^{λ/(a-1)}` and
/// `k_r = t^{a/(a-1)}`.
#[derive(Clone, Debug)]
pub(crate) struct BrooksCoreyClosed {
    p_b: f64,
    lambda: f64,
    am1: f64,
    scale: f64,
    m0: f64,
    u_b: f64,
    pub u_min: f64,
    sat: Saturation,
}

impl BrooksCoreyClosed {
    pub fn new(p_b: f64, lambda: f64, m0: f64, sat: Saturation) -> Self {
        let a = 3.0 * lambda + 2.0;
        let am1 = a - 1.0;
        let scale = m0 * p_b.abs();
        let u_b = m0 * p_b;
        BrooksCoreyClosed {
            p_b,
            lambda,
            am1,
            scale,
            m0,
            u_b,
            u_min: u_b * a / am1,
            sat,
        }
    }

    #[inline]
    fn t_of(&self, u: f64) -> f64 {
        1.0 + (u - self.u_b) * self.am1 / self.scale
    }

    fn kirchhoff(&self, p: f64) -> f64 {
        if p >= self.p_b {
            self.m0 * p
        } else {
            let x = p / self.p_b;
            self.u_b + self.scale * (-self.am1 * x.ln()).exp_m1() / self.am1
        }
    }

    fn pressure(&self, u: f64) -> f64 {
        if u >= self.u_b {
            return u / self.m0;
        }
        let t = self.t_of(u);
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.p_b * t.powf(-1.0 / self.am1)
        }
    }

    fn state_at(&self, u: f64) -> StateAt {
        if u >= self.u_b {
            return StateAt {
                saturation: self.sat.s_max,
                dsat_du: 0.0,
                pressure: u / self.m0,
                dpressure_du: 1.0 / self.m0,
            };
        }
        let t = self.t_of(u);
        if t <= 0.0 {
            return StateAt {
                saturation: self.sat.s_min,
                dsat_du: f64::INFINITY,
                pressure: f64::NEG_INFINITY,
                dpressure_du: f64::INFINITY,
            };
        }
        let beta = self.lambda / self.am1;
        let ln_t = t.ln();
        let theta = (beta * ln_t).exp();
        let kr = ((1.0 + 1.0 / self.am1) * ln_t).exp();
        StateAt {
            saturation: self.sat.of_eff(theta),
            dsat_du: self.sat.span() * self.lambda * theta / (t * self.scale),
            pressure: self.p_b * (-ln_t / self.am1).exp(),
            dpressure_du: 1.0 / (self.m0 * kr),
        }
    }

    /// Anchored at `u = M0 p_b`.
    fn sat_primitive(&self, u: f64) -> f64 {
        if u >= self.u_b {
            return self.sat.s_max * (u - self.u_b);
        }
        let t = self.t_of(u).max(0.0);
        let beta1 = self.lambda / self.am1 + 1.0;
        self.sat.s_min * (u - self.u_b)
            + self.sat.span() * self.scale / (self.am1 * beta1) * (t.powf(beta1) - 1.0)
    }

    fn pressure_primitive(&self, u: f64) -> f64 {
        if u >= self.u_b {
            return u * u / (2.0 * self.m0);
        }
        let t = self.t_of(u).max(0.0);
        let gamma = 1.0 / self.am1;
        let base = self.u_b * self.u_b / (2.0 * self.m0);
        let coef = self.p_b * self.scale / self.am1;
        if (1.0 - gamma).abs() < 1e-12 {
            base + coef * t.ln()
        } else {
            base + coef * (t.powf(1.0 - gamma) - 1.0) / (1.0 - gamma)
        }
    }
}

const TABLE_KNOTS: usize = 2048;
const Y_MIN_EXP: f64 = -10.0;
const Y_MAX_EXP: f64 = 6.0;

/// Tabulated transform for van Genuchten and regularized laws.
///
/// Knots are log-spaced in the distance below the saturated pressure. At each
/// knot the table stores `u`, `∫ s du` and `∫ p du`; values between knots come
/// from an 8-point Gauss-Legendre rule on the partial cell, so the table is
/// consistent with itself at knots to the last bit. Beyond the last knot the
/// integrals are evaluated by adaptive Gauss-Kronrod.
#[derive(Clone, Debug)]
pub(crate) struct KirchhoffTable {
    model: RetentionModel,
    sat: Saturation,
    m0: f64,
    regularization: Option<(KrRegularization, f64)>,
    p_sat: f64,
    kr_sat: f64,
    pub u_sat: f64,
    knots: Vec<f64>,
    u: Vec<f64>,
    g: Vec<f64>,
    pp: Vec<f64>,
    pub u_min: f64,
    tail_tol: f64,
}

impl KirchhoffTable {
    pub fn new(
        model: RetentionModel,
        sat: Saturation,
        m0: f64,
        regularization: Option<(KrRegularization, f64)>,
    ) -> Self {
        let p_sat = model.saturated_pressure();
        let p_scale = model.pressure_scale();
        let kr_sat = match regularization {
            Some((KrRegularization::Additive, d2)) => 1.0 + d2,
            Some((KrRegularization::Max, d2)) => d2.max(1.0),
            None => 1.0,
        };
        let mut table = KirchhoffTable {
            model,
            sat,
            m0,
            regularization,
            p_sat,
            kr_sat,
            u_sat: m0 * kr_sat * p_sat,
            knots: Vec::with_capacity(TABLE_KNOTS),
            u: Vec::with_capacity(TABLE_KNOTS),
            g: Vec::with_capacity(TABLE_KNOTS),
            pp: Vec::with_capacity(TABLE_KNOTS),
            u_min: f64::NEG_INFINITY,
            tail_tol: 1e-12 * m0 * p_scale,
        };

        // knots from p_sat downward, then reversed to increasing order
        let mut desc = Vec::with_capacity(TABLE_KNOTS);
        desc.push(p_sat);
        let n_log = TABLE_KNOTS - 1;
        for j in 0..n_log {
            let e = Y_MIN_EXP + (Y_MAX_EXP - Y_MIN_EXP) * j as f64 / (n_log - 1) as f64;
            desc.push(p_sat - p_scale * 10f64.powf(e));
        }
        let mut u = table.u_sat;
        let mut g = 0.0;
        let mut pp = table.u_sat * table.u_sat / (2.0 * m0 * kr_sat);
        let mut vals = vec![(p_sat, u, g, pp)];
        for w in desc.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            let [du, dg, dpp] = quadrature::gauss_legendre8_triple(|q| table.integrands(q), lo, hi);
            u -= du;
            g -= dg;
            pp -= dpp;
            vals.push((lo, u, g, pp));
        }
        vals.reverse();
        for (p, u, g, pp) in vals {
            table.knots.push(p);
            table.u.push(u);
            table.g.push(g);
            table.pp.push(pp);
        }
        if regularization.is_none() {
            let p_lo = table.knots[0];
            let tail = quadrature::integrate_to_neg_infinity(
                |q| m0 * table.kr(q),
                p_lo,
                p_lo.abs(),
                1e-30,
                1e-13,
            );
            table.u_min = table.u[0] - tail;
        }
        table
    }

    #[inline]
    fn kr(&self, p: f64) -> f64 {
        let kr = self.model.kr_of_pressure(p);
        match self.regularization {
            None => kr,
            Some((KrRegularization::Max, d2)) => kr.max(d2),
            Some((KrRegularization::Additive, d2)) => kr + d2,
        }
    }

    #[inline]
    fn saturation(&self, p: f64) -> f64 {
        self.sat.of_eff(self.model.eff_sat(p))
    }

    /// `[du/dp, s du/dp, p du/dp]`.
    #[inline]
    fn integrands(&self, p: f64) -> [f64; 3] {
        let m = self.m0 * self.kr(p);
        [m, self.saturation(p) * m, p * m]
    }

    /// Index `i` of the cell `[knots[i], knots[i+1]]` containing `p`.
    fn cell_of_p(&self, p: f64) -> usize {
        let i = self.knots.partition_point(|&k| k <= p);
        i.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn cell_of_u(&self, u: f64) -> usize {
        let i = self.u.partition_point(|&k| k <= u);
        i.saturating_sub(1).min(self.u.len() - 2)
    }

    fn u_in_cell(&self, i: usize, p: f64) -> f64 {
        self.u[i] + quadrature::gauss_legendre8(|q| self.m0 * self.kr(q), self.knots[i], p)
    }

    /// `(u, ∫ s du, ∫ p du)` at `p` for `p` below the saturated pressure.
    fn integrals_at(&self, p: f64) -> [f64; 3] {
        let p_lo = self.knots[0];
        if p >= p_lo {
            let i = self.cell_of_p(p);
            let [du, dg, dpp] = quadrature::gauss_legendre8_triple(|q| self.integrands(q), self.knots[i], p);
            [self.u[i] + du, self.g[i] + dg, self.pp[i] + dpp]
        } else {
            let tol = self.tail_tol;
            let du = quadrature::integrate(|q| self.integrands(q)[0], p, p_lo, tol * 1e-6, 1e-14);
            let dg = quadrature::integrate(|q| self.integrands(q)[1], p, p_lo, tol * 1e-6, 1e-14);
            let dpp = quadrature::integrate(|q| self.integrands(q)[2], p, p_lo, tol * 1e-6, 1e-14);
            [self.u[0] - du, self.g[0] - dg, self.pp[0] - dpp]
        }
    }

    fn kirchhoff(&self, p: f64) -> f64 {
        if p >= self.p_sat {
            return self.u_sat + self.m0 * self.kr_sat * (p - self.p_sat);
        }
        if p >= self.knots[0] {
            let i = self.cell_of_p(p);
            self.u_in_cell(i, p)
        } else {
            self.integrals_at(p)[0]
        }
    }

    fn pressure(&self, u: f64) -> f64 {
        if u >= self.u_sat {
            return self.p_sat + (u - self.u_sat) / (self.m0 * self.kr_sat);
        }
        if u <= self.u_min {
            return f64::NEG_INFINITY;
        }
        if u >= self.u[0] {
            let i = self.cell_of_u(u);
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            let (ua, ub) = (self.u[i], self.u[i + 1]);
            let guess = if ub > ua { a + (b - a) * (u - ua) / (ub - ua) } else { a };
            self.newton(u, guess, a, b, |p| self.u_in_cell(i, p))
        } else {
            // below the table: expand downward until bracketed
            let mut b = self.knots[0];
            let mut a = b;
            let mut step = b.abs();
            for _ in 0..200 {
                a = b - step;
                if self.integrals_at(a)[0] <= u {
                    break;
                }
                b = a;
                step *= 2.0;
            }
            let guess = 0.5 * (a + b);
            self.newton(u, guess, a, b, |p| self.integrals_at(p)[0])
        }
    }

    /// Safeguarded Newton for `u(p) = target` on `[a, b]`.
    fn newton<F: Fn(f64) -> f64>(&self, target: f64, guess: f64, mut a: f64, mut b: f64, u_of: F) -> f64 {
        let mut p = guess.clamp(a, b);
        for _ in 0..100 {
            let r = u_of(p) - target;
            if r == 0.0 {
                return p;
            }
            if r > 0.0 {
                b = p;
            } else {
                a = p;
            }
            let d = self.m0 * self.kr(p);
            let mut next = p - r / d;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - p).abs() <= 2.0 * f64::EPSILON * p.abs() || b - a <= 2.0 * f64::EPSILON * p.abs() {
                return next;
            }
            p = next;
        }
        p
    }

    fn state_at(&self, u: f64) -> StateAt {
        if u >= self.u_sat {
            return StateAt {
                saturation: self.sat.s_max,
                dsat_du: 0.0,
                pressure: self.pressure(u),
                dpressure_du: 1.0 / (self.m0 * self.kr_sat),
            };
        }
        let p = self.pressure(u);
        if p == f64::NEG_INFINITY {
            return StateAt {
                saturation: self.sat.s_min,
                dsat_du: f64::INFINITY,
                pressure: p,
                dpressure_du: f64::INFINITY,
            };
        }
        let du_dp = self.m0 * self.kr(p);
        StateAt {
            saturation: self.saturation(p),
            dsat_du: self.sat.span() * self.model.eff_sat_dp(p) / du_dp,
            pressure: p,
            dpressure_du: 1.0 / du_dp,
        }
    }

    /// Anchored at `u = u_sat`.
    fn sat_primitive(&self, u: f64) -> f64 {
        if u >= self.u_sat {
            return self.sat.s_max * (u - self.u_sat);
        }
        let p = self.pressure(u);
        if p == f64::NEG_INFINITY {
            return self.g[0]
                - quadrature::integrate_to_neg_infinity(
                    |q| self.integrands(q)[1],
                    self.knots[0],
                    self.knots[0].abs(),
                    1e-30,
                    1e-13,
                );
        }
        self.integrals_at(p)[1]
    }

    fn pressure_primitive(&self, u: f64) -> f64 {
        if u >= self.u_sat {
            return u * u / (2.0 * self.m0 * self.kr_sat);
        }
        let p = self.pressure(u);
        if p == f64::NEG_INFINITY {
            return self.pp[0]
                - quadrature::integrate_to_neg_infinity(
                    |q| self.integrands(q)[2],
                    self.knots[0],
                    self.knots[0].abs(),
                    1e-30,
                    1e-13,
                );
        }
        self.integrals_at(p)[2]
    }
}
