use proptest::prelude::*;
use richards_core::hydraulics::KrRegularization;
use richards_core::{psi_factor, Error, Hydraulics, RetentionModel, RhoGConvention, SoilParams, SourceLaw};

const P_B: f64 = -712.2;
const LAMBDA: f64 = 0.694;
const S_M: f64 = 0.0458;

fn sand() -> Hydraulics {
    Hydraulics::new(SoilParams::sand()).unwrap()
}

fn vg(alpha_per_cm: f64, l: f64) -> Hydraulics {
    Hydraulics::new(SoilParams {
        model: RetentionModel::van_genuchten_per_cm(alpha_per_cm, l),
        ..SoilParams::sand()
    })
    .unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn initial_saturation_of_sand() {
    assert!((sand().saturation_from_pressure(-2e4) - 0.1401).abs() < 5e-4);
}

#[test]
fn saturation_endpoints() {
    let h = sand();
    assert_eq!(h.saturation_from_pressure(P_B), 1.0);
    assert_eq!(h.saturation_from_pressure(0.0), 1.0);
    let expected = S_M + (1.0 - S_M) * 10f64.powf(-LAMBDA);
    assert!((h.saturation_from_pressure(10.0 * P_B) - expected).abs() < 1e-14);
    // cross-check by inverting numerically
    let p = bisect(|p| h.saturation_from_pressure(p) - expected, -1e5, P_B);
    assert!((p / (10.0 * P_B) - 1.0).abs() < 1e-10);
}

#[test]
fn pressure_from_saturation_inverts() {
    let h = sand();
    assert!((h.pressure_from_saturation(1.0).unwrap() - P_B).abs() < 1e-9);
    let p = h.pressure_from_saturation(0.1401).unwrap();
    assert!((p / -2e4 - 1.0).abs() < 5e-3, "{p}");
    assert!(matches!(h.pressure_from_saturation(S_M), Err(Error::DegenerateSaturation(_))));
    assert!(h.pressure_from_saturation(1.5).is_err());

    let hygiene = vg(0.0079, 10.4);
    assert_eq!(hygiene.pressure_from_saturation(1.0).unwrap(), 0.0);
}

#[test]
fn relative_permeability_values() {
    let h = sand();
    assert_eq!(h.rel_perm(1.0), 1.0);
    assert_eq!(h.rel_perm(S_M), 0.0);
    let theta: f64 = (0.1401 - S_M) / (1.0 - S_M);
    let oracle = ((3.0 + 2.0 / LAMBDA) * theta.ln()).exp();
    assert!((h.rel_perm(0.1401) / oracle - 1.0).abs() < 1e-12);
    assert!((h.rel_perm(0.1401) - 1.22e-6).abs() < 0.01e-6);
}

#[test]
fn regularized_permeability() {
    let h = sand().regularize(0.1f64.sqrt()).unwrap();
    assert!((h.rel_perm(S_M) - 0.1).abs() < 1e-15);
    assert_eq!(h.rel_perm(1.0), 1.0);
    let plain = sand();
    for i in 0..=100 {
        let s = S_M + (1.0 - S_M) * i as f64 / 100.0;
        assert!((h.rel_perm(s) - plain.rel_perm(s)).abs() <= 0.1 + 1e-15);
    }
    let add = sand().regularize_with(0.1f64.sqrt(), KrRegularization::Additive).unwrap();
    for i in 0..=100 {
        let s = S_M + (1.0 - S_M) * i as f64 / 100.0;
        assert!((add.rel_perm(s) - plain.rel_perm(s)).abs() <= 0.1 + 1e-15);
    }
}

#[test]
fn kirchhoff_anchors() {
    let h = sand();
    let m0 = h.m0();
    assert_eq!(h.kirchhoff(0.0), 0.0);
    assert!((h.kirchhoff(P_B) / (m0 * P_B) - 1.0).abs() < 1e-14);
    assert_eq!(h.inv_kirchhoff(0.0).unwrap(), 0.0);
    assert!((h.inv_kirchhoff(m0 * P_B).unwrap() / P_B - 1.0).abs() < 1e-13);
}

#[test]
fn minimal_generalized_pressure_by_quadrature() {
    let h = sand();
    let m0 = h.m0();
    // ∫_{-1e9}^{p_b} kr dp in the variable p = p_b e^t
    let t_max = (1e9 / P_B.abs()).ln();
    let tail = P_B.abs() * simpson(|t| (-(1.0 + 3.0 * LAMBDA) * t).exp(), 0.0, t_max, 20_000);
    let oracle = -m0 * (P_B.abs() + tail);
    assert!((h.u_min() / oracle - 1.0).abs() < 1e-9, "{} vs {oracle}", h.u_min());
    assert!((h.u_min() / (m0 * P_B) - 1.3245).abs() < 1e-3);
}

#[test]
fn inverse_guard_near_minimum() {
    let h = sand();
    let u = h.u_min() * (1.0 - 1e-12);
    assert!(matches!(h.inv_kirchhoff(u), Err(Error::BelowMinimalPressure { .. })));
    assert!(matches!(h.inv_kirchhoff(2.0 * h.u_min()), Err(Error::BelowMinimalPressure { .. })));
}

#[test]
fn suction_identity() {
    let h = sand();
    assert_eq!(h.h_neg(0.5).unwrap(), 0.0);
    let m0 = h.m0();
    assert!((h.h_neg(m0 * P_B).unwrap() - 712.2).abs() < 1e-9);
    for i in 1..=100 {
        let u = h.u_min() * 0.99 * i as f64 / 100.0;
        assert_eq!(h.h_neg(u).unwrap() + h.inv_kirchhoff(u).unwrap(), 0.0);
    }
}

#[test]
fn psi_factor_values() {
    assert_eq!(psi_factor(-1.0, 0.02), 0.0);
    assert_eq!(psi_factor(0.01, 0.02), 0.5);
    assert_eq!(psi_factor(0.04, 0.02), 1.0);
}

#[test]
fn infiltration_flux_density() {
    let h = sand();
    let (c, sigma) = (1e5, 0.02);
    assert_eq!(h.kappa_star(0.0, 0.3, c, sigma).unwrap(), 0.0);
    assert_eq!(h.kappa_star(-1e-6, 0.0, c, sigma).unwrap(), 0.0);
    for &u in &[-1e-6, 1e-6] {
        let full = h.head(u).unwrap() / c;
        assert!((h.kappa_star(u, 0.05, c, sigma).unwrap() - full).abs() <= 1e-15 * full.abs());
    }
}

#[test]
fn domain_primitive() {
    let h = sand();
    let f = SourceLaw::default();
    let r = h.primitive_reference();
    assert_eq!(h.primitive_domain(r, 100.0, &f).unwrap(), 0.0);
    // derivative n s(v)
    let v: f64 = -1e-3;
    let step = 1e-8 * v.abs();
    let d = (h.primitive_domain(v + step, 100.0, &f).unwrap() - h.primitive_domain(v - step, 100.0, &f).unwrap())
        / (2.0 * step);
    let expected = h.params().n * h.saturation_from_u(v);
    assert!((d / expected - 1.0).abs() < 1e-6, "{d} vs {expected}");
}

#[test]
fn boundary_primitive() {
    let h = sand();
    let (tau, c, sigma) = (100.0, 1e5, 0.02);
    assert_eq!(h.primitive_boundary(0.0, 0.5, tau, c, sigma).unwrap(), 0.0);
    assert_eq!(h.primitive_boundary(-1e-6, 0.0, tau, c, sigma).unwrap(), 0.0);
    let v = 1e-4;
    let closed = tau * v * v / (2.0 * c * h.m0() * h.rho_g_eff());
    let got = h.primitive_boundary(v, 0.05, tau, c, sigma).unwrap();
    assert!((got / closed - 1.0).abs() < 1e-12, "{got} vs {closed}");
}

#[test]
fn convention_sets_rho_g() {
    let phys = Hydraulics::new(SoilParams {
        rho_g_convention: RhoGConvention::Physical,
        ..SoilParams::sand()
    })
    .unwrap();
    assert!((phys.rho_g_eff() - 9810.0).abs() < 1e-9);
    assert!((sand().rho_g_eff() - 9.81).abs() < 1e-12);
}

#[test]
fn van_genuchten_round_trip_moderate_pressures() {
    for &(alpha, l) in &[(0.0079, 10.4), (0.005, 7.09), (0.00423, 2.06), (0.0115, 2.03), (0.02, 2.76), (0.00152, 1.17)] {
        let h = vg(alpha, l);
        for &p in &[-1e4, -3e3, -500.0, -10.0, 0.0, 100.0] {
            let back = h.inv_kirchhoff(h.kirchhoff(p)).unwrap();
            assert!((back - p).abs() / p.abs().max(1.0) < 1e-6, "alpha {alpha}, l {l}, p {p}: {back}");
        }
    }
}

#[test]
fn assumption_checks_match_known_outcomes() {
    let silt = vg(0.00423, 2.06).verify_assumptions(400);
    let passed: Vec<bool> = silt.inequalities.iter().map(|c| c.passed).collect();
    assert_eq!(passed, vec![true, false, true, true], "{silt:?}");

    let bc = sand().verify_assumptions(400);
    assert!(bc.all_inequalities_pass(), "{bc:?}");
    assert!(!bc.crucial_implication);

    let reg = sand().regularize(0.1).unwrap().verify_assumptions(400);
    assert!(reg.crucial_implication);
}

#[test]
fn invalid_parameters_rejected() {
    let bad = SoilParams {
        k: -1.0,
        ..SoilParams::sand()
    };
    assert!(Hydraulics::new(bad).is_err());
    let bad = SoilParams {
        s_min: 1.0,
        ..SoilParams::sand()
    };
    assert!(Hydraulics::new(bad).is_err());
}

proptest! {
    #[test]
    fn saturation_is_monotone(p1 in -1e6f64..1e4, p2 in -1e6f64..1e4) {
        let h = sand();
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(h.saturation_from_pressure(lo) <= h.saturation_from_pressure(hi));
        prop_assert!(h.kirchhoff(lo) <= h.kirchhoff(hi));
    }

    #[test]
    fn kirchhoff_round_trip(lg in 0.0f64..5.0, pos in 0.0f64..1e4, negative in any::<bool>()) {
        let h = sand();
        let p = if negative { -(10f64.powf(lg)) } else { pos };
        let back = h.inv_kirchhoff(h.kirchhoff(p)).unwrap();
        prop_assert!((back - p).abs() / p.abs().max(1.0) < 1e-9);
    }

    #[test]
    fn domain_primitive_is_convex(a in -0.99f64..0.5, b in -0.99f64..0.5) {
        let h = sand();
        let scale = h.u_min().abs();
        let (x, y) = (a * scale, b * scale);
        let f = SourceLaw::default();
        let mid = h.primitive_domain(0.5 * (x + y), 100.0, &f).unwrap();
        let avg = 0.5 * (h.primitive_domain(x, 100.0, &f).unwrap() + h.primitive_domain(y, 100.0, &f).unwrap());
        prop_assert!(mid <= avg + 1e-15 * avg.abs().max(1e-12));
    }
}
