//! Numerical check of the structural inequalities on `k` and `p_c`.
//!
//! Each inequality asks that some nonnegative quantity stays bounded on an
//! open saturation interval. We evaluate it on log-spaced grids that approach
//! the open endpoints to distance `1e-4` and to distance `1e-8`; a quantity
//! whose maximum keeps growing under that refinement is reported unbounded.
//! Saturations are effective saturations and pressures are scaled by the
//! model's pressure scale, so the constants are dimensionless.

use super::{Hydraulics, KrRegularization, RetentionModel};

const COARSE_GAP: f64 = 1e-4;
const FINE_GAP: f64 = 1e-8;
const GROWTH_LIMIT: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    /// 1-based position in the list of conditions.
    pub index: usize,
    /// Smallest admissible constant on the coarse grid.
    pub constant_coarse: f64,
    /// Same on the refined grid.
    pub constant_fine: f64,
    /// Fine constant minus the growth allowance, positive when violated.
    pub violation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub inequalities: Vec<InequalityCheck>,
    /// Whether bounded generalized pressure implies bounded pressure.
    pub crucial_implication: bool,
    /// `|p|` near the minimal generalized pressure at the two probe distances.
    pub pressure_near_u_min: [f64; 2],
}

impl AssumptionReport {
    pub fn all_inequalities_pass(&self) -> bool {
        self.inequalities.iter().all(|c| c.passed)
    }
}

struct Laws<'a> {
    hyd: &'a Hydraulics,
    scale: f64,
}

impl Laws<'_> {
    fn model(&self) -> RetentionModel {
        self.hyd.params.model
    }

    fn k(&self, theta: f64) -> f64 {
        self.hyd.regularized_kr(self.model().kr_of_eff_sat(theta))
    }

    fn dk(&self, theta: f64) -> f64 {
        let raw = match self.model() {
            RetentionModel::BrooksCorey { lambda, .. } => {
                let e = 3.0 + 2.0 / lambda;
                e * theta.powf(e - 1.0)
            }
            RetentionModel::VanGenuchten { l, .. } => {
                let m = 1.0 - 1.0 / l;
                let ln_t = theta.ln();
                let one_minus_x = -(ln_t / m).exp_m1();
                let b = -(m * one_minus_x.ln()).exp_m1();
                let db = (one_minus_x.ln() * (m - 1.0)).exp() * ((1.0 / m - 1.0) * ln_t).exp();
                0.5 * b * b / theta.sqrt() + 2.0 * theta.sqrt() * b * db
            }
        };
        let hyd = self.hyd;
        if hyd.params.delta > 0.0
            && hyd.params.kr_regularization == KrRegularization::Max
            && self.model().kr_of_eff_sat(theta) < hyd.kr_floor
        {
            0.0
        } else {
            raw
        }
    }

    fn p(&self, theta: f64) -> f64 {
        self.model().pressure_of_eff_sat(theta) / self.scale
    }

    fn dp(&self, theta: f64) -> f64 {
        self.model().pressure_of_eff_sat_dtheta(theta) / self.scale
    }

    fn quantity(&self, index: usize, theta: f64) -> f64 {
        match index {
            1 => 1.0 / self.dp(theta),
            2 => {
                let k = self.k(theta);
                let dk = self.dk(theta);
                if k == 0.0 {
                    if dk == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    dk * dk / k
                }
            }
            3 => {
                let k = self.k(theta);
                k * self.p(theta).abs() + k.sqrt() * self.dp(theta)
            }
            4 => (1.0 - theta) * self.dp(theta).sqrt(),
            _ => unreachable!(),
        }
    }
}

/// Log-spaced points approaching `0` (and `1` when `upper`) to distance `gap`.
fn grid(n: usize, gap: f64, lower: bool, upper: bool) -> Vec<f64> {
    let mut pts = Vec::with_capacity(2 * n);
    let (a, b) = (gap.log10(), 0.5f64.log10());
    for i in 0..n {
        let d = 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64);
        if lower {
            pts.push(d);
        }
        if upper {
            pts.push(1.0 - d);
        }
    }
    pts
}

pub(super) fn verify(hyd: &Hydraulics, grid_size: usize) -> AssumptionReport {
    let n = grid_size.max(10);
    let laws = Laws {
        hyd,
        scale: hyd.params.model.pressure_scale(),
    };
    let intervals = [(1, true, true), (2, true, true), (3, true, false), (4, false, true)];
    let inequalities = intervals
        .iter()
        .map(|&(index, lower, upper)| {
            let max_on = |gap: f64| {
                grid(n, gap, lower, upper)
                    .into_iter()
                    .map(|t| laws.quantity(index, t))
                    .fold(0.0f64, |m, q| if q.is_nan() { f64::INFINITY } else { m.max(q) })
            };
            let coarse = max_on(COARSE_GAP);
            let fine = max_on(FINE_GAP);
            let allowance = GROWTH_LIMIT * coarse;
            let passed = fine.is_finite() && fine <= allowance;
            InequalityCheck {
                index,
                constant_coarse: coarse,
                constant_fine: fine,
                violation: (fine - allowance).max(0.0),
                passed,
            }
        })
        .collect();

    let u_min = hyd.u_min();
    let (crucial_implication, pressure_near_u_min) = if u_min == f64::NEG_INFINITY {
        (true, [0.0, 0.0])
    } else {
        let probe = |eps: f64| hyd.state_at(u_min + eps * u_min.abs()).pressure.abs();
        let near = [probe(1e-3), probe(1e-9)];
        (near[1].is_finite() && near[1] <= 10.0 * near[0], near)
    };

    AssumptionReport {
        inequalities,
        crucial_implication,
        pressure_near_u_min,
    }
}
