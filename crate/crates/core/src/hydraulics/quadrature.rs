//! Adaptive Gauss-Kronrod (7/15) quadrature and fixed 8-point Gauss-Legendre
//! rules used to build and evaluate the Kirchhoff tables.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const XGL8: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const WGL8: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive G7K15 quadrature of `f` over the finite interval `[a, b]`.
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate falls below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, pv, pe) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            parts.push((lo, hi, pv, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // re-sum to shed accumulated cancellation in the running total
    parts.iter().map(|p| p.2).sum()
}

/// `∫_{-∞}^{b} f(q) dq` through the substitution `q = b - L (1 - t) / t`.
pub fn integrate_to_neg_infinity<F: Fn(f64) -> f64>(
    f: F,
    b: f64,
    length_scale: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let l = length_scale;
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let q = b - l * (1.0 - t) / t;
        let v = f(q) * l / (t * t);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, abs_tol, rel_tol)
}

/// Eight-point Gauss-Legendre rule on `[a, b]`.
#[inline]
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..4 {
        let dx = h * XGL8[k];
        s += WGL8[k] * (f(c - dx) + f(c + dx));
    }
    s * h
}

/// Three integrands over the same cell with one set of node evaluations.
#[inline]
pub fn gauss_legendre8_triple<F: Fn(f64) -> [f64; 3]>(f: F, a: f64, b: f64) -> [f64; 3] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = [0.0; 3];
    for k in 0..4 {
        let dx = h * XGL8[k];
        let l = f(c - dx);
        let r = f(c + dx);
        for i in 0..3 {
            s[i] += WGL8[k] * (l[i] + r[i]);
        }
    }
    [s[0] * h, s[1] * h, s[2] * h]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let v = gauss_legendre8(|x| x.powi(15) + 3.0 * x.powi(4), -1.0, 2.0);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-11 * exact.abs());
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn semi_infinite_tail() {
        let v = integrate_to_neg_infinity(|q: f64| (q).exp(), 0.0, 1.0, 1e-14, 1e-13);
        assert!((v - 1.0).abs() < 1e-11, "{v}");
        let v = integrate_to_neg_infinity(|q: f64| 1.0 / (q * q), -2.0, 2.0, 1e-14, 1e-13);
        assert!((v - 0.5).abs() < 1e-11, "{v}");
    }
}
