//! Surface water on the infiltration boundary: the exchange flux, the explicit
//! height update and the step-size bounds that keep heights nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydraulics::{Hydraulics, RetentionModel};
use crate::mesh::TraceGrid;

/// One scalar per infiltration-boundary dual cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceField {
    pub values: Vec<f64>,
    pub level: usize,
}

impl SurfaceField {
    pub fn new(values: Vec<f64>, level: usize) -> Self {
        SurfaceField { values, level }
    }

    pub fn constant(value: f64, trace: &TraceGrid, level: usize) -> Self {
        SurfaceField {
            values: vec![value; trace.len()],
            level,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check(&self, trace: &TraceGrid, level: usize) -> Result<()> {
        if self.level != level {
            return Err(Error::Dimension {
                expected: level,
                found: self.level,
            });
        }
        if self.values.len() != trace.len() {
            return Err(Error::Dimension {
                expected: trace.len(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Rain falling at `rate` [m/s] on `x ∈ [x.0, x.1]` for `t ∈ [t.0, t.1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RainEvent {
    pub x: (f64, f64),
    pub rate: f64,
    pub t: (f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RainSpec {
    pub events: Vec<RainEvent>,
}

impl RainSpec {
    pub fn new(events: Vec<RainEvent>) -> Self {
        RainSpec { events }
    }

    pub fn validate(&self) -> std::result::Result<(), (usize, String)> {
        for (i, e) in self.events.iter().enumerate() {
            if !(e.rate >= 0.0 && e.rate.is_finite()) {
                return Err((i, format!("rate must be nonnegative, got {}", e.rate)));
            }
            if !(e.x.0 <= e.x.1) || !(e.t.0 <= e.t.1) {
                return Err((i, "intervals must be ordered".into()));
            }
        }
        Ok(())
    }

    /// Cell-averaged rain rate on each dual cell at time `t`.
    pub fn cell_rates(&self, trace: &TraceGrid, t: f64) -> Vec<f64> {
        self.rates_with(trace, |e| if t >= e.t.0 && t < e.t.1 { 1.0 } else { 0.0 })
    }

    /// Cell- and time-averaged rain rate over `[t0, t1)`.
    pub fn cell_rates_over(&self, trace: &TraceGrid, t0: f64, t1: f64) -> Vec<f64> {
        if !(t1 > t0) {
            return self.cell_rates(trace, t0);
        }
        self.rates_with(trace, |e| ((t1.min(e.t.1) - t0.max(e.t.0)) / (t1 - t0)).max(0.0))
    }

    fn rates_with(&self, trace: &TraceGrid, active: impl Fn(&RainEvent) -> f64) -> Vec<f64> {
        let n = trace.len();
        (0..n)
            .map(|k| {
                let lo = if k == 0 { trace.centers[0] } else { 0.5 * (trace.centers[k - 1] + trace.centers[k]) };
                let hi = if k + 1 == n { trace.centers[n - 1] } else { 0.5 * (trace.centers[k] + trace.centers[k + 1]) };
                let len = hi - lo;
                self.events
                    .iter()
                    .map(|e| {
                        let frac = active(e);
                        if frac == 0.0 {
                            return 0.0;
                        }
                        let overlap = (hi.min(e.x.1) - lo.max(e.x.0)).max(0.0);
                        if len > 0.0 {
                            frac * e.rate * overlap / len
                        } else if lo >= e.x.0 && lo <= e.x.1 {
                            frac * e.rate
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }
}

/// `g(u, w) = w/c - κ*(u, w)` [m/s], positive when water leaves the surface.
pub fn coupling_flux_g(u: f64, w: f64, hyd: &Hydraulics, c: f64, sigma: f64) -> Result<f64> {
    Ok(w / c - hyd.kappa_star(u, w, c, sigma)?)
}

/// `w^{n+1} = w^n + τ (r^{n+1} - g(u^{n+1}, w^n))`, cell by cell.
pub fn update_surface(
    w_n: &SurfaceField,
    u_trace: &[f64],
    r: &SurfaceField,
    tau: f64,
    c: f64,
    sigma: f64,
    hyd: &Hydraulics,
) -> Result<SurfaceField> {
    for len in [u_trace.len(), r.values.len()] {
        if len != w_n.values.len() {
            return Err(Error::Dimension {
                expected: w_n.values.len(),
                found: len,
            });
        }
    }
    if r.level != w_n.level {
        return Err(Error::Dimension {
            expected: w_n.level,
            found: r.level,
        });
    }
    let values = w_n
        .values
        .iter()
        .zip(u_trace)
        .zip(&r.values)
        .map(|((&w, &u), &rate)| Ok(w + tau * (rate - coupling_flux_g(u, w, hyd, c, sigma)?)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SurfaceField::new(values, w_n.level))
}

/// Step-size bound for nonnegative surface heights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityBound {
    pub theta1_min: f64,
    pub theta2_min: f64,
    /// `min{c, θ₁, θ₂}`.
    pub tau_max: f64,
}

/// `θ₁ = cσ/(σ - c r + h)` and `θ₂ = cσ/(σ + h)` for one cell, `∞` when the
/// denominator is not positive; `h` is the suction head.
pub fn cell_thetas(h_head: f64, r: f64, c: f64, sigma: f64) -> (f64, f64) {
    let theta = |den: f64| if den > 0.0 { c * sigma / den } else { f64::INFINITY };
    (theta(sigma - c * r + h_head), theta(sigma + h_head))
}

pub fn positivity_step_bound(u_trace: &[f64], r: &[f64], c: f64, sigma: f64, hyd: &Hydraulics) -> Result<PositivityBound> {
    if r.len() != u_trace.len() {
        return Err(Error::Dimension {
            expected: u_trace.len(),
            found: r.len(),
        });
    }
    let mut t1 = f64::INFINITY;
    let mut t2 = f64::INFINITY;
    for (&u, &rate) in u_trace.iter().zip(r) {
        let h_head = hyd.h_neg(u)? / hyd.rho_g_eff();
        let (a, b) = cell_thetas(h_head, rate, c, sigma);
        t1 = t1.min(a);
        t2 = t2.min(b);
    }
    Ok(PositivityBound {
        theta1_min: t1,
        theta2_min: t2,
        tau_max: c.min(t1).min(t2),
    })
}

/// `h n μ / (K ρ_eff g_eff sup|k_r'|)` [s]; zero when the slope is unbounded.
pub fn cfl_bound(h: f64, hyd: &Hydraulics) -> f64 {
    let p = hyd.params();
    let slope = match p.model {
        RetentionModel::BrooksCorey { lambda, .. } => 3.0 + 2.0 / lambda,
        RetentionModel::VanGenuchten { .. } => f64::INFINITY,
    };
    h * p.n * p.mu / (p.k * hyd.rho_g_eff() * slope)
}
