use proptest::prelude::*;
use richards_core::surface::{cell_thetas, cfl_bound, coupling_flux_g, positivity_step_bound, update_surface};
use richards_core::{Hydraulics, RhoGConvention, SoilParams, SurfaceField};

const C: f64 = 1e5;
const SIGMA: f64 = 0.02;

fn sand() -> Hydraulics {
    Hydraulics::new(SoilParams::sand()).unwrap()
}

fn step_one(w: f64, u: f64, r: f64, tau: f64, hyd: &Hydraulics) -> f64 {
    let out = update_surface(
        &SurfaceField::new(vec![w], 0),
        &[u],
        &SurfaceField::new(vec![r], 0),
        tau,
        C,
        SIGMA,
        hyd,
    )
    .unwrap();
    out.values[0]
}

/// Generalized pressure whose head is `head` metres.
fn u_at_head(hyd: &Hydraulics, head: f64) -> f64 {
    hyd.kirchhoff(head * hyd.rho_g_eff())
}

#[test]
fn coupling_flux_examples() {
    let h = sand();
    assert_eq!(coupling_flux_g(0.0, 0.0, &h, C, SIGMA).unwrap(), 0.0);
    assert_eq!(coupling_flux_g(h.kirchhoff(-2e4), 0.0, &h, C, SIGMA).unwrap(), 0.0);
    for &p in &[-2e4, -100.0, 3.0] {
        let u = h.kirchhoff(p);
        let w = 0.05;
        let head = p / h.rho_g_eff();
        let g = coupling_flux_g(u, w, &h, C, SIGMA).unwrap();
        assert!((g - (w - head) / C).abs() <= 1e-12 * g.abs().max(1e-15), "{p}: {g}");
    }
}

#[test]
fn flux_decomposition() {
    let h = sand();
    for &p in &[-5e4, -712.2, -1.0, 0.0, 2.0] {
        for &w in &[0.0, 0.005, 0.02, 0.3] {
            let u = h.kirchhoff(p);
            let g = coupling_flux_g(u, w, &h, C, SIGMA).unwrap();
            let k = h.kappa_star(u, w, C, SIGMA).unwrap();
            assert!((g + k - w / C).abs() <= 1e-15 * (k.abs() + w / C));
        }
    }
}

#[test]
fn update_examples() {
    let h = sand();
    assert!((step_one(1.0, 0.0, 0.0, 100.0, &h) - 0.999).abs() < 1e-15);
    assert_eq!(step_one(0.0, 0.0, 0.0, 100.0, &h), 0.0);
    let w = 0.3;
    let u = u_at_head(&h, w);
    assert!((step_one(w, u, 0.0, 100.0, &h) - w).abs() < 1e-12);
}

#[test]
fn update_rejects_mismatched_lengths() {
    let h = sand();
    let w = SurfaceField::new(vec![0.0; 3], 1);
    let r = SurfaceField::new(vec![0.0; 3], 1);
    assert!(update_surface(&w, &[0.0; 2], &r, 1.0, C, SIGMA, &h).is_err());
    assert!(update_surface(&w, &[0.0; 3], &SurfaceField::new(vec![0.0; 3], 0), 1.0, C, SIGMA, &h).is_err());
}

#[test]
fn update_is_local() {
    let h = sand();
    let u = vec![h.kirchhoff(-3e3), 0.0, h.kirchhoff(-50.0), h.kirchhoff(10.0)];
    let w = SurfaceField::new(vec![0.01, 0.0, 0.2, 0.05], 0);
    let r = SurfaceField::new(vec![1e-6, 0.0, 8.33e-6, 0.0], 0);
    let base = update_surface(&w, &u, &r, 50.0, C, SIGMA, &h).unwrap();
    let mut u2 = u.clone();
    u2[2] = h.kirchhoff(-1e4);
    let changed = update_surface(&w, &u2, &r, 50.0, C, SIGMA, &h).unwrap();
    for q in [0, 1, 3] {
        assert_eq!(base.values[q], changed.values[q]);
    }
    assert_ne!(base.values[2], changed.values[2]);
}

#[test]
fn theta_examples() {
    let (a, b) = cell_thetas(1.0, 0.0, C, SIGMA);
    assert!((a - 1960.8).abs() < 0.05 && (b - 1960.8).abs() < 0.05);
    let (a, b) = cell_thetas(1.0, 8.33e-6, C, SIGMA);
    assert!((a - 1.07e4).abs() < 0.01e4, "{a}");
    assert!((a.min(b).min(C) - 1960.8).abs() < 0.05);
}

#[test]
fn bound_without_suction_is_c() {
    let h = sand();
    let b = positivity_step_bound(&[0.0, h.kirchhoff(5.0)], &[0.0, 0.0], C, SIGMA, &h).unwrap();
    assert_eq!(b.tau_max, C);
    let u = u_at_head(&h, -1.0);
    let b = positivity_step_bound(&[u, 0.0], &[0.0, 0.0], C, SIGMA, &h).unwrap();
    assert!((b.tau_max - 2000.0 / 1.02).abs() < 1e-6, "{b:?}");
    assert!(positivity_step_bound(&[0.0], &[0.0, 0.0], C, SIGMA, &h).is_err());
}

#[test]
fn cfl_coefficients() {
    let coef = cfl_bound(1.0, &sand());
    assert!((coef / 1.14e3 - 1.0).abs() < 0.02, "{coef}");
    assert!((cfl_bound(2.0, &sand()) - 2.0 * coef).abs() < 1e-9);
    let phys = Hydraulics::new(SoilParams {
        rho_g_convention: RhoGConvention::Physical,
        ..SoilParams::sand()
    })
    .unwrap();
    assert!((cfl_bound(1.0, &phys) / 1.14 - 1.0).abs() < 0.02);
    let h = 2f64.sqrt() / 16.0;
    assert!((cfl_bound(h, &sand()) - 100.7).abs() < 1.0);
}

#[test]
fn bound_is_sharp() {
    let h = sand();
    let u = u_at_head(&h, -2.0);
    let b = positivity_step_bound(&[u], &[0.0], C, SIGMA, &h).unwrap();
    assert!(step_one(SIGMA, u, 0.0, b.tau_max, &h) >= -1e-15);
    assert!(step_one(SIGMA, u, 0.0, 1.05 * b.tau_max, &h) < 0.0);
}

proptest! {
    #[test]
    fn positivity_under_the_bound(
        lp in -1.0f64..5.0,
        suction in any::<bool>(),
        w in 0.0f64..0.1,
        r in 0.0f64..2e-5,
    ) {
        let h = sand();
        let p = if suction { -(10f64.powf(lp)) } else { 10f64.powf(lp - 3.0) };
        let u = h.kirchhoff(p);
        let b = positivity_step_bound(&[u], &[r], C, SIGMA, &h).unwrap();
        prop_assert!(b.tau_max > 0.0 && b.tau_max <= C);
        let next = step_one(w, u, r, b.tau_max, &h);
        prop_assert!(next >= -1e-14 * w.max(1e-3), "{next}");
    }
}
