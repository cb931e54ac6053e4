//! Closed forms and brute-force quadratures checked against the library.

use std::f64::consts::PI;

use bscatter_core::bound_lab::{envelope_fit, free_evolution_kernel, weighted_l2_row, BoundEnvelope, BracketSign};
use bscatter_core::free_resolvent::{difference_radial, resolvent_complex, resolvent_radial};
use bscatter_core::geometry::{composite_gauss, logspace};
use bscatter_core::m_matrix::{detect_regularity, hs_relative_difference, perturbed_resolvent, Route};
use bscatter_core::{split_potential, BallGrid, Potential, RadialGrid, Sign, C64};

/// Γ(3/4)
const GAMMA_3_4: f64 = 1.225_416_702_465_177_6;

/// (2π²r)⁻¹ ∫₀^K k sin(kr) / (k⁴ − μ⁴) dk by composite Gauss.
fn fourier_resolvent(mu: C64, r: f64, kmax: f64) -> C64 {
    let n = (2.0 * kmax) as usize;
    let edges: Vec<f64> = (0..=n).map(|i| kmax * i as f64 / n as f64).collect();
    let (k, w) = composite_gauss(&edges, 16);
    let z = mu.powi(4);
    let s: C64 = k.iter().zip(&w).map(|(&k, &w)| w * k * (k * r).sin() / (k.powi(4) - z)).sum();
    s / (2.0 * PI * PI * r)
}

#[test]
fn resolvent_matches_fourier_integral() {
    for &(mu, r) in &[(C64::new(1.0, 0.8), 0.7), (C64::new(0.5, 0.4), 2.5), (C64::new(2.0, 1.0), 1.3)] {
        let want = fourier_resolvent(mu, r, 2000.0);
        let got = resolvent_complex(mu, r);
        assert!((got - want).norm() < 1e-7, "μ = {mu}, r = {r}: {got} vs {want}");
    }
}

#[test]
fn real_axis_limit_from_above() {
    let (l, r) = (0.9, 1.7);
    let near = resolvent_complex(C64::new(l, 1e-7), r);
    let plus = resolvent_radial(l, r, Sign::Plus);
    assert!((near - plus).norm() < 1e-6 * plus.norm());
    let jump = plus - resolvent_radial(l, r, Sign::Minus);
    assert!((jump - difference_radial(l, r)).norm() < 1e-14);
}

#[test]
fn dispersive_kernel_at_origin() {
    for &t in &[0.5, 3.0, 40.0] {
        let got = free_evolution_kernel(t, 0.0).unwrap().norm();
        let want = GAMMA_3_4 / (8.0 * PI * PI * t.powf(0.75));
        assert!((got - want).abs() < 1e-9 * want, "t = {t}: {got} vs {want}");
    }
}

#[test]
fn ball_grid_integrates_polynomials() {
    let g = BallGrid::new(6.0, 3).unwrap();
    let m2 = g.integrate(|p| p.dot(&p));
    let want = 4.0 * PI * 6f64.powi(5) / 5.0;
    assert!((m2 - want).abs() < 1e-9 * want);
    let odd = g.integrate(|p| p.x1 * p.x2 * p.x2);
    assert!(odd.abs() < 1e-9);
}

#[test]
fn radial_grid_integrates_gaussian_moment() {
    let g = RadialGrid::new(12.0, 0.5, 12).unwrap();
    // ∫ e^{−|x|²} dx = π^{3/2}
    let v = g.integrate(|r| (-r * r).exp());
    assert!((v - PI.powf(1.5)).abs() < 1e-12, "{v}");
}

#[test]
fn weighted_row_far_field_constant() {
    // for |x| → ∞ the row tends to ‖⟨z⟩⁻²‖₂ / |x| = π / |x|
    let r = 1e5;
    let v = weighted_l2_row(r, 2.0).unwrap();
    assert!((v * r / PI - 1.0).abs() < 1e-3, "{}", v * r / PI);
}

#[test]
fn envelope_fit_recovers_planted_constant() {
    let family = BoundEnvelope::family(1.0, 1.0, 2.0, BracketSign::Minus, true);
    let levels: Vec<Vec<(f64, f64, f64)>> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&reach| {
            let g = logspace(0.1, reach, 9);
            g.iter().flat_map(|&x| g.iter().map(move |&y| (x, y, 0.25 * family.shape(x, y)))).collect()
        })
        .collect();
    let fit = envelope_fit(&levels, family).unwrap();
    assert!((fit.envelope.constant - 0.25).abs() < 1e-14);
    assert!(fit.growth.iter().all(|g| (g - 1.0).abs() < 1e-12));
}

#[test]
fn small_potential_is_regular_and_routes_agree() {
    let g = BallGrid::new(6.0, 2).unwrap();
    let s = split_potential(&Potential::gaussian_well(0.1), &g).unwrap();
    assert!(detect_regularity(&s, &g).unwrap().is_regular());
    let a = perturbed_resolvent(0.7, Sign::Plus, &s, &g, Route::Symmetric).unwrap();
    let b = perturbed_resolvent(0.7, Sign::Plus, &s, &g, Route::Direct).unwrap();
    let d = hs_relative_difference(&a, &b);
    assert!(d < 1e-5, "{d}");
}
