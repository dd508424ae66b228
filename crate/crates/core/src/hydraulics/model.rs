//! Pointwise retention and relative-permeability laws in terms of the
//! effective saturation `θ = (s - s_m) / (s_M - s_m)`.

use serde::{Deserialize, Serialize};

/// Water column pressure per centimetre of head used to convert van Genuchten
/// `α` values tabulated in 1/cm.
pub const PA_PER_CM_HEAD: f64 = 98.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RetentionModel {
    /// Brooks-Corey retention with the Burdine permeability exponent `3 + 2/λ`.
    BrooksCorey {
        /// Bubbling (air entry) pressure in Pa, negative.
        p_b: f64,
        /// Pore-size distribution factor.
        lambda: f64,
    },
    /// van Genuchten retention with `m = 1 - 1/l` and the Mualem permeability.
    VanGenuchten {
        /// Inverse pressure scale in 1/Pa.
        alpha: f64,
        l: f64,
    },
}

impl RetentionModel {
    /// van Genuchten parameters with `α` given per centimetre of water head.
    pub fn van_genuchten_per_cm(alpha_per_cm: f64, l: f64) -> Self {
        RetentionModel::VanGenuchten {
            alpha: alpha_per_cm / PA_PER_CM_HEAD,
            l,
        }
    }

    /// Pressure above which the medium is fully saturated.
    pub fn saturated_pressure(&self) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, .. } => p_b,
            RetentionModel::VanGenuchten { .. } => 0.0,
        }
    }

    /// Characteristic pressure magnitude of the unsaturated branch.
    pub fn pressure_scale(&self) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, .. } => p_b.abs(),
            RetentionModel::VanGenuchten { alpha, .. } => 1.0 / alpha,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        match *self {
            RetentionModel::BrooksCorey { p_b, lambda } => {
                if !(p_b < 0.0 && p_b.is_finite()) {
                    return Err(("p_b", format!("must be negative and finite, got {p_b}")));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(("lambda", format!("must be positive, got {lambda}")));
                }
            }
            RetentionModel::VanGenuchten { alpha, l } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(("alpha", format!("must be positive, got {alpha}")));
                }
                if !(l > 1.0 && l.is_finite()) {
                    return Err(("l", format!("must exceed 1, got {l}")));
                }
            }
        }
        Ok(())
    }

    /// Effective saturation `θ(p)`.
    pub fn eff_sat(&self, p: f64) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, lambda } => {
                if p >= p_b {
                    1.0
                } else {
                    (p / p_b).powf(-lambda)
                }
            }
            RetentionModel::VanGenuchten { alpha, l } => {
                if p >= 0.0 {
                    1.0
                } else {
                    let m = 1.0 - 1.0 / l;
                    let z = (alpha * -p).powf(l);
                    (-m * z.ln_1p()).exp()
                }
            }
        }
    }

    /// `dθ/dp`.
    pub fn eff_sat_dp(&self, p: f64) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, lambda } => {
                if p >= p_b {
                    0.0
                } else {
                    -lambda * (p / p_b).powf(-lambda) / p
                }
            }
            RetentionModel::VanGenuchten { alpha, l } => {
                if p >= 0.0 {
                    0.0
                } else {
                    let m = 1.0 - 1.0 / l;
                    let z = (alpha * -p).powf(l);
                    -m * l * z * (-(m + 1.0) * z.ln_1p()).exp() / p
                }
            }
        }
    }

    /// Unregularized relative permeability as a function of pressure.
    pub fn kr_of_pressure(&self, p: f64) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, lambda } => {
                if p >= p_b {
                    1.0
                } else {
                    (p / p_b).powf(-(3.0 * lambda + 2.0))
                }
            }
            RetentionModel::VanGenuchten { alpha, l } => {
                if p >= 0.0 {
                    return 1.0;
                }
                // x = θ^{1/m} = 1/(1+z), 1-x = z/(1+z)
                let m = 1.0 - 1.0 / l;
                let z = (alpha * -p).powf(l);
                let x = 1.0 / (1.0 + z);
                let theta = x.powf(m);
                let bracket = if x < 0.5 {
                    -(m * (-x).ln_1p()).exp_m1()
                } else {
                    -(m * (z / (1.0 + z)).ln()).exp_m1()
                };
                theta.sqrt() * bracket * bracket
            }
        }
    }

    /// Unregularized relative permeability as a function of effective saturation.
    pub fn kr_of_eff_sat(&self, theta: f64) -> f64 {
        let theta = theta.clamp(0.0, 1.0);
        match *self {
            RetentionModel::BrooksCorey { lambda, .. } => theta.powf(3.0 + 2.0 / lambda),
            RetentionModel::VanGenuchten { l, .. } => {
                let m = 1.0 - 1.0 / l;
                let x = theta.powf(1.0 / m);
                let bracket = if x < 0.5 {
                    -(m * (-x).ln_1p()).exp_m1()
                } else {
                    1.0 - (1.0 - x).powf(m)
                };
                theta.sqrt() * bracket * bracket
            }
        }
    }

    /// Capillary pressure of an effective saturation in `(0, 1]`.
    pub fn pressure_of_eff_sat(&self, theta: f64) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, lambda } => p_b * theta.powf(-1.0 / lambda),
            RetentionModel::VanGenuchten { alpha, l } => {
                let m = 1.0 - 1.0 / l;
                if theta >= 1.0 {
                    return 0.0;
                }
                -(-theta.ln() / m).exp_m1().powf(1.0 / l) / alpha
            }
        }
    }

    /// `dp_c/dθ` on the unsaturated branch.
    pub fn pressure_of_eff_sat_dtheta(&self, theta: f64) -> f64 {
        match *self {
            RetentionModel::BrooksCorey { p_b, lambda } => {
                -p_b / lambda * theta.powf(-1.0 / lambda - 1.0)
            }
            RetentionModel::VanGenuchten { alpha, l } => {
                let m = 1.0 - 1.0 / l;
                let y = theta.powf(-1.0 / m) - 1.0;
                y.powf(1.0 / l - 1.0) / (alpha * l * m) * theta.powf(-1.0 / m - 1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vg_kr_matches_eff_sat_form() {
        let model = RetentionModel::van_genuchten_per_cm(0.00423, 2.06);
        for &p in &[-1.0, -100.0, -1e4, -3e5] {
            let theta = model.eff_sat(p);
            let a = model.kr_of_pressure(p);
            let b = model.kr_of_eff_sat(theta);
            assert!((a - b).abs() <= 1e-9 * a.max(1e-300), "{p}: {a} vs {b}");
        }
    }

    #[test]
    fn pressure_of_eff_sat_inverts_eff_sat() {
        for model in [
            RetentionModel::BrooksCorey { p_b: -712.2, lambda: 0.694 },
            RetentionModel::van_genuchten_per_cm(0.0079, 10.4),
        ] {
            for &p in &[-8e3, -2e4, -5e4] {
                let q = model.pressure_of_eff_sat(model.eff_sat(p));
                assert!((q - p).abs() < 1e-9 * p.abs(), "{model:?} {p} {q}");
            }
        }
    }

    #[test]
    fn pressure_derivative_matches_finite_difference() {
        let model = RetentionModel::van_genuchten_per_cm(0.0115, 2.03);
        let theta = 0.4;
        let h = 1e-6;
        let fd = (model.pressure_of_eff_sat(theta + h) - model.pressure_of_eff_sat(theta - h)) / (2.0 * h);
        let d = model.pressure_of_eff_sat_dtheta(theta);
        assert!((fd - d).abs() < 1e-6 * d.abs());
    }
}
