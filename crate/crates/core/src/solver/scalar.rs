//! Exact minimization of `½ a x² + r x + φ(x)` over an interval.

use crate::error::{Error, Result};

/// Convex scalar function with one-sided derivatives.
pub trait ScalarConvex {
    fn value(&self, x: f64) -> f64;
    fn deriv_left(&self, x: f64) -> f64;
    fn deriv_right(&self, x: f64) -> f64;
    /// Curvature of the right branch; may be infinite.
    fn second(&self, x: f64) -> f64;
    /// Points where the derivative may jump.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `φ ≡ 0`.
pub struct Zero;

impl ScalarConvex for Zero {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn deriv_left(&self, _: f64) -> f64 {
        0.0
    }
    fn deriv_right(&self, _: f64) -> f64 {
        0.0
    }
    fn second(&self, _: f64) -> f64 {
        0.0
    }
}

/// `φ(x) = |x|`.
pub struct Abs;

impl ScalarConvex for Abs {
    fn value(&self, x: f64) -> f64 {
        x.abs()
    }
    fn deriv_left(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
    fn deriv_right(&self, x: f64) -> f64 {
        if x < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
    fn second(&self, _: f64) -> f64 {
        0.0
    }
    fn kinks(&self) -> Vec<f64> {
        vec![0.0]
    }
}

const MAX_ITERATIONS: usize = 400;
const MAX_EXPANSIONS: usize = 2100;

/// Returns the increment `α*` such that `x0 + α*` minimizes
/// `½ a x² + r x + φ(x)` on `[lo, hi]`.
pub fn scalar_convex_minimize<P: ScalarConvex + ?Sized>(
    a: f64,
    r: f64,
    phi: &P,
    lo: f64,
    hi: f64,
    x0: f64,
    scalar_tol: f64,
) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NotCoercive(a));
    }
    let x = minimize_at(a, r, phi, lo, hi, x0, scalar_tol);
    Ok(x - x0)
}

pub(crate) fn minimize_at<P: ScalarConvex + ?Sized>(
    a: f64,
    r: f64,
    phi: &P,
    lo: f64,
    hi: f64,
    x0: f64,
    scalar_tol: f64,
) -> f64 {
    let dl = |x: f64| a * x + r + phi.deriv_left(x);
    let dr = |x: f64| a * x + r + phi.deriv_right(x);
    let x0 = x0.clamp(lo, hi);
    let scale = x0.abs().max((r / a).abs()).max(f64::MIN_POSITIVE);
    let width_tol = |x: f64| scalar_tol * x.abs().max(scale);

    let d0r = dr(x0);
    let d0l = dl(x0);
    // bracket [left, right] with dr(left) < 0 < dl(right)
    let (mut left, mut right);
    if d0r < 0.0 {
        if x0 >= hi {
            return hi;
        }
        left = x0;
        right = if hi.is_finite() {
            hi
        } else {
            let mut step = newton_step(x0, d0r, a + phi.second(x0)).max(width_tol(x0));
            let mut b = x0 + step;
            let mut k = 0;
            while dr(b) < 0.0 && k < MAX_EXPANSIONS {
                left = b;
                step *= 2.0;
                b = x0 + step;
                k += 1;
            }
            b
        };
        if right == hi && dl(hi) <= 0.0 {
            return hi;
        }
    } else if d0l > 0.0 {
        if x0 <= lo {
            return lo;
        }
        right = x0;
        left = if lo.is_finite() {
            lo
        } else {
            let mut step = (-newton_step(x0, d0l, a + phi.second(x0))).max(width_tol(x0));
            let mut b = x0 - step;
            let mut k = 0;
            while dl(b) > 0.0 && k < MAX_EXPANSIONS {
                right = b;
                step *= 2.0;
                b = x0 - step;
                k += 1;
            }
            b
        };
        if left == lo && dr(lo) >= 0.0 {
            return lo;
        }
    } else {
        return x0;
    }

    // kinks: sign test narrows the bracket to a smooth segment
    for k in phi.kinks() {
        if k > left && k < right {
            if dl(k) <= 0.0 && dr(k) >= 0.0 {
                return k;
            }
            if dr(k) < 0.0 {
                left = k;
            } else {
                right = k;
            }
        }
    }

    // safeguarded Newton on the smooth segment
    let mut x = if d0r < 0.0 { left } else { right };
    for _ in 0..MAX_ITERATIONS {
        let d = dr(x);
        if d == 0.0 {
            return x;
        }
        if d < 0.0 {
            left = left.max(x);
        } else {
            right = right.min(x);
        }
        if right - left <= width_tol(x) {
            return pick(left, right, &dr);
        }
        let mut next = x + newton_step(x, d, a + phi.second(x));
        if !(next > left && next < right) {
            next = 0.5 * (left + right);
        }
        if (next - x).abs() <= 0.25 * width_tol(x) {
            return next;
        }
        x = next;
    }
    pick(left, right, &dr)
}

#[inline]
fn newton_step(_x: f64, d: f64, curvature: f64) -> f64 {
    if curvature.is_finite() && curvature > 0.0 {
        -d / curvature
    } else {
        0.0
    }
}

fn pick(left: f64, right: f64, dr: &impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (left + right);
    if dr(mid).abs() <= dr(left).abs().min(dr(right).abs()) {
        mid
    } else if dr(left).abs() <= dr(right).abs() {
        left
    } else {
        right
    }
}
