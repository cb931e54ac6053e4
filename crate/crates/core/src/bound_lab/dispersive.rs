//! Decay of the free evolution e^{−itΔ²}.
//!
//! The radial kernel is
//! K_t(r) = (2/(πi)) ∫ λ³ e^{−itλ⁴} [R⁺ − R⁻](λ⁴)(r) dλ = (1/(2π²r)) ∫ λ sin(λr) e^{−itλ⁴} dλ.
//! Rotating the contour to λ = e^{−iπ/8}ρ turns the phase into e^{−tρ⁴}.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::envelope::DecayFit;
use crate::error::{Error, Result};
use crate::geometry::{LambdaPanels, RadialGrid};
use crate::wave_operator::RadialFunction;
use crate::C64;

/// e^{−iτλ⁴} with complex τ, Re τ > 0, Im τ ≤ 0; the contour integrand is
/// e^{−τρ⁴}.
fn kernel_on_contour(tau: C64, r: f64, refine: bool) -> C64 {
    let rot = C64::from_polar(1.0, -PI / 8.0);
    let rho_max = (45.0 / tau.re).powf(0.25);
    let mut panels = LambdaPanels::new(0.0, rho_max, r, 24).expect("valid range");
    if refine {
        panels = panels.refined();
    }
    let f = |rho: f64| -> C64 {
        let lam = rot * rho;
        let s = if r > 0.0 { (lam * r).sin() / r } else { lam };
        lam * s * (-tau * rho.powi(4)).exp() * rot
    };
    panels.integrate(f) / (2.0 * PI * PI)
}

/// K_t(r) with the refinement change relative to max(|K|, |K_t(0)|).
pub fn free_evolution_kernel(t: f64, r: f64) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let tau = C64::new(t, 0.0);
    let a = kernel_on_contour(tau, r, false);
    let b = kernel_on_contour(tau, r, true);
    let scale = a.norm().max(kernel_on_contour(tau, 0.0, false).norm());
    let change = (a - b).norm() / scale;
    if change > 1e-9 {
        return Err(Error::QuadratureNotConverged { change });
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersiveReport {
    pub t_values: Vec<f64>,
    pub sups: Vec<f64>,
    pub fit: DecayFit,
    /// max over t and ξ of |t^{3/4}K_t(ξt^{1/4}) − K_1(ξ)| / max|K_1|.
    pub collapse: f64,
    pub xi_max: f64,
}

/// sup_r |K_t(r)| on r = ξ t^{1/4}, ξ ∈ [0, ξ_max], the slope of its decay in
/// t and the collapse of the rescaled profiles.
pub fn free_dispersive_decay(t_values: &[f64], xi_max: f64, points: usize) -> Result<DispersiveReport> {
    let xi: Vec<f64> = (0..points).map(|k| xi_max * k as f64 / (points - 1).max(1) as f64).collect();
    let reference = xi.iter().map(|&x| free_evolution_kernel(1.0, x)).collect::<Result<Vec<_>>>()?;
    let ref_max = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut sups = Vec::with_capacity(t_values.len());
    let mut collapse = 0.0f64;
    for &t in t_values {
        let q = t.powf(0.25);
        let mut sup = 0.0f64;
        for (x, k1) in xi.iter().zip(&reference) {
            let k = free_evolution_kernel(t, x * q)?;
            sup = sup.max(k.norm());
            collapse = collapse.max((k * t.powf(0.75) - k1).norm() / ref_max);
        }
        sups.push(sup);
    }
    let fit = DecayFit::fit(t_values, &sups)?;
    Ok(DispersiveReport { t_values: t_values.to_vec(), sups, fit, collapse, xi_max })
}

/// e^{−itΔ²}u for radial u, through the sine transform:
/// u(r) = (2/π) ∫ S_u(λ) sin(λr)/r dλ.
pub fn free_evolve(u: &RadialFunction, t: f64, lambda_max: f64) -> RadialFunction {
    use rayon::prelude::*;
    let g = &u.grid;
    let scale = g.radius + 4.0 * t * lambda_max.powi(3);
    let panels = LambdaPanels::new(0.0, lambda_max, scale, 16).expect("valid range");
    let su: Vec<C64> =
        panels.nodes.iter().zip(&panels.weights).map(|(&l, &w)| u.sine_transform(l) * C64::from_polar(w, -t * l.powi(4))).collect();
    let values = g
        .nodes
        .par_iter()
        .map(|&r| {
            let acc: C64 = panels.nodes.iter().zip(&su).map(|(&l, s)| s * ((l * r).sin() / r)).sum();
            acc * (2.0 / PI)
        })
        .collect();
    RadialFunction { grid: g.clone(), values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitarityReport {
    pub t: f64,
    pub initial_norm: f64,
    pub evolved_norm: f64,
    pub relative_error: f64,
}

/// ‖e^{−itΔ²}u‖ / ‖u‖ − 1 for u = e^{−r²/2}, on a radial grid large enough to
/// hold the evolved packet.
pub fn free_unitarity_check(t: f64, radius: f64) -> Result<UnitarityReport> {
    let g = RadialGrid::new(radius, 0.25, 16)?;
    let u = RadialFunction::from_fn(g, |r| C64::new((-0.5 * r * r).exp(), 0.0));
    let w = free_evolve(&u, t, 9.0);
    let (a, b) = (u.norm(), w.norm());
    Ok(UnitarityReport { t, initial_norm: a, evolved_norm: b, relative_error: (b / a - 1.0).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_matches_damped_real_axis_integral() {
        // τ = t − iδ damps the real-axis integrand by e^{−δλ⁴}
        let tau = C64::new(1.0, -0.5);
        for r in [0.0, 0.7, 3.0] {
            let lmax = (45.0f64 / 0.5).powf(0.25);
            let p = LambdaPanels::new(0.0, lmax, r + 4.0 * lmax.powi(3), 16).unwrap();
            let direct = p.integrate(|l| {
                let s = if r > 0.0 { (l * r).sin() / r } else { l };
                (-C64::new(0.0, 1.0) * tau * l.powi(4)).exp() * (l * s)
            }) / (2.0 * PI * PI);
            let contour = kernel_on_contour(tau, r, true);
            assert!((direct - contour).norm() < 1e-10, "{r}: {direct} {contour}");
        }
    }

    #[test]
    fn origin_value_is_closed_form() {
        // (1/2π²) e^{−3iπ/8} ∫ ρ² e^{−tρ⁴} dρ = (1/2π²) e^{−3iπ/8} Γ(3/4) / (4 t^{3/4})
        let gamma_34 = 1.225_416_702_465_178;
        for t in [1.0, 16.0] {
            let k = free_evolution_kernel(t, 0.0).unwrap();
            let exact = C64::from_polar(gamma_34 / (4.0 * t.powf(0.75)) / (2.0 * PI * PI), -3.0 * PI / 8.0);
            assert!((k - exact).norm() < 1e-12 * exact.norm());
        }
    }

    #[test]
    fn evolution_preserves_the_norm() {
        let r = free_unitarity_check(0.05, 40.0).unwrap();
        assert!(r.relative_error < 1e-3, "{r:?}");
    }
}
