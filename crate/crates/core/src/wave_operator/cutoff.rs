//! Smooth spectral cut-offs.
//!
//! χ is built from the integrated bump b(s) = exp(−p/(s(1−s))):
//! χ(λ) = 1 − ∫₀ᵗ b / ∫₀¹ b with t = λ/λ₀ − 1. It is C^∞, equal to 1 on
//! [0, λ₀] and to 0 on [2λ₀, ∞). With p = 0.3 the derivative bounds are
//! |χ′| ≤ 1.74/λ₀ and |χ″| ≤ 7.2/λ₀².

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{gauss_legendre, LambdaPanels};

const SHARPNESS: f64 = 0.3;
const RULE: usize = 96;
const TRANSITION_PIECES: usize = 8;

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(RULE))
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-SHARPNESS / (t * (1.0 - t))).exp()
    }
}

fn bump_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let q = t * (1.0 - t);
        bump(t) * SHARPNESS * (1.0 - 2.0 * t) / (q * q)
    }
}

/// ∫_a^b bump, 0 ≤ a ≤ b ≤ 1.
fn bump_integral(a: f64, b: f64) -> f64 {
    let (x, w) = rule();
    let h = 0.5 * (b - a);
    x.iter().zip(w).map(|(x, w)| w * bump(a + h * (x + 1.0))).sum::<f64>() * h
}

fn bump_norm() -> f64 {
    static N: OnceLock<f64> = OnceLock::new();
    *N.get_or_init(|| bump_integral(0.0, 0.5) + bump_integral(0.5, 1.0))
}

/// Cut-off pair χ, χ̃ = 1 − χ at threshold λ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCutoff {
    pub lambda0: f64,
}

impl SpectralCutoff {
    pub fn new(lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) || !lambda0.is_finite() {
            return Err(Error::InvalidInput(format!("λ₀ must be positive, got {lambda0}")));
        }
        Ok(Self { lambda0 })
    }

    fn t(&self, lambda: f64) -> f64 {
        lambda / self.lambda0 - 1.0
    }

    pub fn chi(&self, lambda: f64) -> f64 {
        let t = self.t(lambda);
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else if t < 0.5 {
            1.0 - bump_integral(0.0, t) / bump_norm()
        } else {
            bump_integral(t, 1.0) / bump_norm()
        }
    }

    pub fn chi_tilde(&self, lambda: f64) -> f64 {
        let t = self.t(lambda);
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else if t < 0.5 {
            bump_integral(0.0, t) / bump_norm()
        } else {
            1.0 - bump_integral(t, 1.0) / bump_norm()
        }
    }

    pub fn dchi(&self, lambda: f64) -> f64 {
        -bump(self.t(lambda)) / (bump_norm() * self.lambda0)
    }

    pub fn d2chi(&self, lambda: f64) -> f64 {
        -bump_prime(self.t(lambda)) / (bump_norm() * self.lambda0 * self.lambda0)
    }

    /// ψ_L(λ) = χ̃(λ) χ(λ/L) / λ.
    pub fn psi(&self, lambda: f64, l: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        self.chi_tilde(lambda) * self.chi(lambda / l) / lambda
    }

    /// End of the support of χ.
    pub fn support_end(&self) -> f64 {
        2.0 * self.lambda0
    }

    /// Breakpoints 0, λ₀ and eight equal pieces of the transition [λ₀, 2λ₀].
    pub fn breaks(&self) -> Vec<f64> {
        let l0 = self.lambda0;
        std::iter::once(0.0).chain((0..=TRANSITION_PIECES).map(|k| l0 * (1.0 + k as f64 / TRANSITION_PIECES as f64))).collect()
    }

    /// λ-panels on the transition [λ₀, 2λ₀] only.
    pub fn transition_panels(&self, scale: f64, phase: f64, order: usize) -> LambdaPanels {
        LambdaPanels::piecewise(&self.breaks()[1..], scale, phase, order).expect("valid breakpoints")
    }

    /// λ-panels on the support of χ for an oscillation of frequency `scale`.
    pub fn low_panels(&self, scale: f64, order: usize) -> LambdaPanels {
        LambdaPanels::piecewise(&self.breaks(), scale, std::f64::consts::PI, order).expect("valid breakpoints")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_support() {
        let c = SpectralCutoff::new(0.1).unwrap();
        for k in 0..=400 {
            let l = 0.25 * k as f64 / 400.0;
            assert!((c.chi(l) + c.chi_tilde(l) - 1.0).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&c.chi(l)));
        }
        assert_eq!(c.chi(0.1), 1.0);
        assert_eq!(c.chi(0.2), 0.0);
    }

    #[test]
    fn derivative_bounds_hold() {
        let l0 = 0.37;
        let c = SpectralCutoff::new(l0).unwrap();
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        for k in 0..=20000 {
            let l = l0 * (1.0 + k as f64 / 20000.0);
            m1 = m1.max(c.dchi(l).abs());
            m2 = m2.max(c.d2chi(l).abs());
        }
        assert!(m1 * l0 <= 2.0 && m1 * l0 > 1.5, "{}", m1 * l0);
        assert!(m2 * l0 * l0 <= 8.0, "{}", m2 * l0 * l0);
    }

    #[test]
    fn derivatives_match_differences() {
        let c = SpectralCutoff::new(1.0).unwrap();
        for &l in &[1.1, 1.3, 1.5, 1.77, 1.95] {
            let h = 1e-5;
            let d1 = (c.chi(l + h) - c.chi(l - h)) / (2.0 * h);
            let d2 = (c.dchi(l + h) - c.dchi(l - h)) / (2.0 * h);
            assert!((d1 - c.dchi(l)).abs() < 1e-8);
            assert!((d2 - c.d2chi(l)).abs() < 1e-6);
        }
    }
}
