//! Structural invariants as property tests.

use bscatter_core::bound_lab::hilbert::i_s_geometry_holds;
use bscatter_core::bound_lab::{free_evolution_kernel, o2_certificate};
use bscatter_core::fit::loglog_fit;
use bscatter_core::free_resolvent::{free_resolvent_kernel, swave_resolvent_real};
use bscatter_core::geometry::logspace;
use bscatter_core::wave_operator::SpectralCutoff;
use bscatter_core::{bracket, Point3, Sign, C64};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| Point3::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_dominates(r in -1e6..1e6f64) {
        let b = bracket(r);
        prop_assert!(b >= 1.0 && b >= r.abs());
        prop_assert!(b <= 1.0 + r.abs());
    }

    #[test]
    fn power_laws_are_fitted_exactly(slope in -5.0..5.0f64, c in 1e-3..1e3f64) {
        let x = logspace(1.0, 1e3, 9);
        let y: Vec<f64> = x.iter().map(|x| c * x.powf(slope)).collect();
        let f = loglog_fit(&x, &y);
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn free_kernel_symmetries(l in 0.01..20.0f64, x in point(), y in point()) {
        let p = free_resolvent_kernel(l, x, y, Sign::Plus).unwrap();
        let q = free_resolvent_kernel(l, y, x, Sign::Plus).unwrap();
        let m = free_resolvent_kernel(l, x, y, Sign::Minus).unwrap();
        prop_assert_eq!(p, q);
        prop_assert!((m - p.conj()).norm() <= 1e-15 * p.norm());
    }

    #[test]
    fn swave_kernel_is_symmetric(l in 0.05..10.0f64, r in 0.0..8.0f64, s in 0.0..8.0f64) {
        let a = swave_resolvent_real(l, r, s, Sign::Plus);
        let b = swave_resolvent_real(l, s, r, Sign::Plus);
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn cutoff_partitions_unity(l0 in 0.01..5.0f64, t in 0.0..4.0f64) {
        let c = SpectralCutoff::new(l0).unwrap();
        let lam = t * l0;
        let (a, b) = (c.chi(lam), c.chi_tilde(lam));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + b - 1.0).abs() < 1e-14);
        if lam >= c.support_end() {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn i_s_geometry(s in 16.0..1e9f64) {
        prop_assert!(i_s_geometry_holds(s));
    }

    #[test]
    fn linear_symbols_are_certified(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        prop_assume!(a.hypot(b) > 1e-3);
        let c = SpectralCutoff::new(1.0).unwrap();
        prop_assert!(o2_certificate(&|l| C64::new(a, b) * l, &c).is_ok());
    }

    #[test]
    fn spherical_points_have_their_radius(r in 0.0..100.0f64, c in -1.0..1.0f64, phi in 0.0..7.0f64) {
        prop_assert!((Point3::spherical(r, c, phi).norm() - r).abs() <= 1e-12 * r.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dispersive_kernel_is_self_similar(xi in 0.0..6.0f64, t in 0.2..50.0f64) {
        let k1 = free_evolution_kernel(1.0, xi).unwrap();
        let kt = free_evolution_kernel(t, xi * t.powf(0.25)).unwrap() * t.powf(0.75);
        prop_assert!((k1 - kt).norm() < 1e-8 * free_evolution_kernel(1.0, 0.0).unwrap().norm());
    }
}
