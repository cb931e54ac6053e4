//! Oscillatory λ-integrals near zero and the weighted L² row norms.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::envelope::DecayFit;
use crate::error::{Error, Result};
use crate::geometry::{bracket, logspace, LambdaPanels};
use crate::wave_operator::SpectralCutoff;
use crate::C64;

/// Growth of the O₂ seminorm from [λ₀/10, 2λ₀] down to λ ~ 1e−6·λ₀ above
/// which a symbol is rejected.
const CERTIFICATE_GROWTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCertificate {
    /// max(|𝓔|/λ, |𝓔′|, λ|𝓔″|) over [λ₀/10, 2λ₀].
    pub reference: f64,
    /// The same quantity over the smallest probed decade.
    pub near_zero: f64,
}

fn seminorm(symbol: &dyn Fn(f64) -> C64, l: f64) -> f64 {
    let h = 1e-3 * l;
    let (fm, f0, fp) = (symbol(l - h), symbol(l), symbol(l + h));
    let d1 = (fp - fm) / (2.0 * h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    (f0.norm() / l).max(d1.norm()).max(l * d2.norm())
}

/// Finite-difference check that |𝓔| ≲ λ, |𝓔′| ≲ 1, |𝓔″| ≲ λ⁻¹ on supp χ.
pub fn o2_certificate(symbol: &dyn Fn(f64) -> C64, cutoff: &SpectralCutoff) -> Result<SymbolCertificate> {
    let l0 = cutoff.lambda0;
    let sup = |a: f64, b: f64| logspace(a, b, 40).into_iter().map(|l| seminorm(symbol, l)).fold(0.0, f64::max);
    let reference = sup(0.1 * l0, 2.0 * l0);
    let near_zero = sup(1e-6 * l0, 1e-5 * l0);
    if !reference.is_finite() || !near_zero.is_finite() || near_zero > CERTIFICATE_GROWTH * reference.max(f64::MIN_POSITIVE) {
        return Err(Error::SymbolClassViolated(format!("O₂ seminorm grows from {reference:.3e} to {near_zero:.3e} towards λ = 0")));
    }
    Ok(SymbolCertificate { reference, near_zero })
}

/// ∫ e^{iλr} χ(λ) 𝓔(λ) dλ.
pub fn oscillatory_integral(symbol: &dyn Fn(f64) -> C64, cutoff: &SpectralCutoff, r: f64) -> C64 {
    let panels = cutoff.low_panels(r, 16);
    panels.integrate(|l| C64::from_polar(cutoff.chi(l), l * r) * symbol(l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryProbe {
    pub certificate: SymbolCertificate,
    pub r_values: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Fit of |I(r)| / (1 + log⟨r⟩) against r.
    pub fit: DecayFit,
}

/// Decay in r of the integral, after dividing out one log factor.
pub fn oscillatory_decay_probe(symbol: &dyn Fn(f64) -> C64, cutoff: &SpectralCutoff, r_values: &[f64]) -> Result<OscillatoryProbe> {
    let certificate = o2_certificate(symbol, cutoff)?;
    let magnitudes: Vec<f64> = r_values.iter().map(|&r| oscillatory_integral(symbol, cutoff, r).norm()).collect();
    let normalized: Vec<f64> = r_values.iter().zip(&magnitudes).map(|(r, m)| m / (1.0 + bracket(*r).ln())).collect();
    let fit = DecayFit::fit_envelope(r_values, &normalized)?;
    Ok(OscillatoryProbe { certificate, r_values: r_values.to_vec(), magnitudes, fit })
}

/// 2π ∫_{−1}^{1} ⟨x + ρω⟩^{−2β} d(cos θ) for |x| = r.
fn shell_average(r: f64, rho: f64, beta: f64) -> f64 {
    let a = 1.0 + r * r + rho * rho;
    let b = 2.0 * r * rho;
    if b < 1e-8 * a {
        return 4.0 * PI * a.powf(-beta);
    }
    let (p, m) = (a + b, a - b);
    let inner = if (beta - 1.0).abs() < 1e-12 { (p / m).ln() } else { (p.powf(1.0 - beta) - m.powf(1.0 - beta)) / (1.0 - beta) };
    2.0 * PI * inner / b
}

/// ‖⟨z⟩^{−β} / |x − z|‖_{L²_z} for |x| = r, in coordinates centred at x so
/// that the Jacobian ρ² cancels the singularity. Beyond ρ = P the
/// integrand is replaced by its leading term 4πρ^{−2β}.
pub fn weighted_l2_row(r: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.5) || !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("weighted_l2_row needs β > 1/2 and |x| ≥ 0, got β = {beta}")));
    }
    let far = 1e6 * (1.0 + r);
    let mut edges: Vec<f64> = Vec::new();
    let near = 2.0 * r + 20.0;
    let n_near = near.ceil() as usize;
    edges.extend((0..=n_near).map(|k| near * k as f64 / n_near as f64));
    let mut e = near;
    while e < far {
        e = (e * 1.25).min(far);
        edges.push(e);
    }
    if r > 0.0 && !edges.iter().any(|x| (*x - r).abs() < 1e-12) {
        edges.push(r);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let panels = LambdaPanels::from_edges(edges, 16);
    let body = panels.integrate_real(|rho| shell_average(r, rho, beta));
    let tail = 4.0 * PI * far.powf(1.0 - 2.0 * beta) / (2.0 * beta - 1.0);
    Ok((body + tail).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2RowSweep {
    pub beta: f64,
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    /// Fit of the norm against ⟨x⟩.
    pub fit: DecayFit,
}

pub fn weighted_l2_sweep(beta: f64, radii: &[f64]) -> Result<L2RowSweep> {
    let norms = radii.iter().map(|&r| weighted_l2_row(r, beta)).collect::<Result<Vec<_>>>()?;
    let br: Vec<f64> = radii.iter().map(|&r| bracket(r)).collect();
    let fit = DecayFit::fit(&br, &norms)?;
    Ok(L2RowSweep { beta, radii: radii.to_vec(), norms, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut() -> SpectralCutoff {
        SpectralCutoff::new(1.0).unwrap()
    }

    #[test]
    fn linear_symbol_decays_quadratically() {
        let r = logspace(10.0, 1000.0, 12);
        let p = oscillatory_decay_probe(&|l| C64::new(l, 0.0), &cut(), &r).unwrap();
        assert!(p.fit.slope <= -1.9, "{:?}", p.fit);
        let q = oscillatory_decay_probe(&|l| C64::new(l * l, 0.0), &cut(), &r).unwrap();
        assert!(q.fit.slope <= -1.9, "{:?}", q.fit);
    }

    #[test]
    fn constant_symbol_is_rejected() {
        let r = logspace(10.0, 1000.0, 12);
        assert!(matches!(oscillatory_decay_probe(&|_| C64::new(1.0, 0.0), &cut(), &r), Err(Error::SymbolClassViolated(_))));
        assert!(matches!(o2_certificate(&|l: f64| C64::new(l.sqrt(), 0.0), &cut()), Err(Error::SymbolClassViolated(_))));
    }

    #[test]
    fn origin_row_matches_closed_form() {
        // ∫ ⟨z⟩^{−4} |z|^{−2} dz = 4π ∫ (1 + ρ²)^{−2} dρ = π²
        let v = weighted_l2_row(0.0, 2.0).unwrap();
        assert!((v * v - PI * PI).abs() < 1e-9, "{}", v * v);
    }

    #[test]
    fn shell_average_matches_quadrature() {
        let edges: Vec<f64> = (0..=40).map(|k| -1.0 + k as f64 / 20.0).collect();
        let (x, w) = crate::geometry::composite_gauss(&edges, 16);
        for &(r, rho, beta) in &[(3.0, 2.0, 2.0), (10.0, 5.0, 1.0), (0.5, 40.0, 0.6)] {
            let q: f64 =
                x.iter().zip(&w).map(|(t, w)| w * (1.0 + r * r + rho * rho + 2.0 * r * rho * t).powf(-beta)).sum::<f64>() * 2.0 * PI;
            assert!((q - shell_average(r, rho, beta)).abs() < 1e-12 * q.abs().max(1e-300), "{q}");
        }
    }
}
