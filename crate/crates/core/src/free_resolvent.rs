//! Kernels of the free resolvent R₀(z) = (Δ² − z)⁻¹ on ℝ³ at z = λ⁴ ± i0,
//! their threshold expansion, and the angular averages used by the radial
//! channel.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{bracket, Point3, RadialGrid};
use crate::{Sign, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Threshold residue a⁺ = (1 + i)/(8π) of R⁺(λ⁴) ~ a⁺/λ.
pub fn a_plus() -> C64 {
    C64::new(1.0, 1.0) / (8.0 * PI)
}

/// Coefficient of λ|x−y|² in the expansion of R⁺(λ⁴).
pub fn a1_plus() -> C64 {
    C64::new(1.0, -1.0) / (48.0 * PI)
}

/// R^±(λ⁴) at distance r.
pub fn resolvent_radial(lambda: f64, r: f64, sign: Sign) -> C64 {
    let x = lambda * r;
    let k = if x < 1e-4 {
        // (1/8πλ) Σ (iⁿ − (−1)ⁿ) xⁿ⁻¹ / n!, through x⁴
        let s = C64::new(1.0, 1.0) - x + C64::new(1.0, -1.0) * (x * x / 6.0) + C64::new(1.0, 1.0) * (x.powi(4) / 120.0);
        s / (8.0 * PI * lambda)
    } else {
        (C64::from_polar(1.0, x) - (-x).exp()) / (8.0 * PI * lambda * lambda * r)
    };
    match sign {
        Sign::Plus => k,
        Sign::Minus => k.conj(),
    }
}

/// Taylor branch of `resolvent_radial`, exposed for cross-checks.
pub fn resolvent_radial_series(lambda: f64, r: f64) -> C64 {
    let x = lambda * r;
    let s = C64::new(1.0, 1.0) - x + C64::new(1.0, -1.0) * (x * x / 6.0) + C64::new(1.0, 1.0) * (x.powi(4) / 120.0);
    s / (8.0 * PI * lambda)
}

/// Closed form of `resolvent_radial` without the series branch.
pub fn resolvent_radial_direct(lambda: f64, r: f64) -> C64 {
    let x = lambda * r;
    (C64::from_polar(1.0, x) - (-x).exp()) / (8.0 * PI * lambda * lambda * r)
}

/// Kernel R^±(λ⁴)(x, y) = (e^{±iλ|x−y|} − e^{−λ|x−y|}) / (8πλ²|x−y|).
pub fn free_resolvent_kernel(lambda: f64, x: Point3, y: Point3, sign: Sign) -> Result<C64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    Ok(resolvent_radial(lambda, x.dist(&y), sign))
}

/// R(μ⁴)(r) for complex μ with Re μ > 0 and Im μ ≥ 0.
pub fn resolvent_complex(mu: C64, r: f64) -> C64 {
    let w = mu * r;
    if w.norm() < 1e-3 {
        let s = C64::new(1.0, 1.0) - w + C64::new(1.0, -1.0) * (w * w / 6.0) + C64::new(1.0, 1.0) * (w.powi(4) / 120.0);
        s / (8.0 * PI * mu)
    } else {
        ((I * w).exp() - (-w).exp()) / (8.0 * PI * mu * mu * r)
    }
}

/// (R⁺ − R⁻)(λ⁴)(r) = i sin(λr) / (4πλ²r), equal to i/(4πλ) at r = 0.
pub fn difference_radial(lambda: f64, r: f64) -> C64 {
    I * (sinc(lambda * r) / (4.0 * PI * lambda))
}

pub fn resolvent_difference_kernel(lambda: f64, x: Point3, y: Point3) -> Result<C64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    Ok(difference_radial(lambda, x.dist(&y)))
}

/// Constant term G₀(x, y) = −|x − y| / (8π).
pub fn g0_kernel(x: Point3, y: Point3) -> f64 {
    -x.dist(&y) / (8.0 * PI)
}

/// G₁(x, y) = |x − y|².
pub fn g1_kernel(x: Point3, y: Point3) -> f64 {
    let d = x - y;
    d.dot(&d)
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

/// (1 − e^{−w}) / w, stable near w = 0.
fn one_minus_exp_over(w: C64) -> C64 {
    if w.norm() < 1e-2 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..12 {
            term *= -w / n as f64;
            sum += term;
        }
        sum
    } else {
        (C64::new(1.0, 0.0) - (-w).exp()) / w
    }
}

/// (e^{w} − 1) / w, stable near w = 0.
pub fn expm1_over(w: C64) -> C64 {
    if w.norm() < 1e-2 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..12 {
            term *= w / n as f64;
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// h(s) = (1 − e^{(−1−i)λs}) / (8πλs).
fn h_aux(lambda: f64, s: f64) -> C64 {
    let c = C64::new(1.0, 1.0);
    c * one_minus_exp_over(c * (lambda * s)) / (8.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxKernelSplit {
    pub g_plus: C64,
    pub f_plus: C64,
    pub phase: C64,
}

impl AuxKernelSplit {
    /// λ R⁺(λ⁴)(x, z) rebuilt from the split.
    pub fn reconstruct(&self, lambda: f64, x_norm: f64) -> C64 {
        self.phase * (self.g_plus + self.f_plus + h_aux(lambda, x_norm))
    }
}

/// Split λR⁺(λ⁴)(x, z) = e^{iλ|x|}(G⁺ + F⁺ + h(|x|)) into the oscillatory
/// difference G⁺ and the slowly varying F⁺.
pub fn aux_split(lambda: f64, x: Point3, z: Point3) -> Result<AuxKernelSplit> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    let a = x.dist(&z);
    let xn = x.norm();
    let d = a - xn;
    // (e^{iλd} − 1) · (1 − e^{(−1−i)λa}) / (8πλa)
    let g = (I * (lambda * d)).exp_m1_c() * h_aux(lambda, a);
    let f = h_aux(lambda, a) - h_aux(lambda, xn);
    Ok(AuxKernelSplit { g_plus: g, f_plus: f, phase: C64::from_polar(1.0, lambda * xn) })
}

trait ExpM1 {
    fn exp_m1_c(self) -> C64;
}

impl ExpM1 for C64 {
    fn exp_m1_c(self) -> C64 {
        expm1_over(self) * self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub sup_ratio_g: f64,
    pub sup_ratio_f: f64,
    pub derivative: usize,
}

/// k-th λ-derivative of a λ-dependent value by Richardson-extrapolated
/// central differences with base step 1e−4·λ.
pub fn lambda_derivative(f: impl Fn(f64) -> C64, lambda: f64, k: usize) -> Result<C64> {
    if lambda < 1e-10 {
        return Err(Error::StepUnderflow { lambda });
    }
    let h = 1e-4 * lambda;
    let d = |h: f64| match k {
        0 => f(lambda),
        1 => (f(lambda + h) - f(lambda - h)) / (2.0 * h),
        2 => (f(lambda + h) - f(lambda) * 2.0 + f(lambda - h)) / (h * h),
        _ => C64::new(f64::NAN, f64::NAN),
    };
    if k > 2 {
        return Err(Error::InvalidInput("derivative order must be 0, 1 or 2".into()));
    }
    if k == 0 {
        return Ok(f(lambda));
    }
    Ok((d(h / 2.0) * 4.0 - d(h)) / 3.0)
}

/// Supremum over samples of |∂ᵏ_λ G⁺| / (⟨z⟩^{k+1} / (|x−z| λᵏ)) and of
/// |∂ᵏ_λ F⁺| / (⟨z⟩ / (min(⟨x⟩, |x−z|) λᵏ)).
pub fn aux_derivative_envelope_check(samples: &[(f64, Point3, Point3)], k: usize) -> Result<EnvelopeCheck> {
    let mut sg: f64 = 0.0;
    let mut sf: f64 = 0.0;
    for &(lambda, x, z) in samples {
        if lambda < 1e-10 {
            return Err(Error::StepUnderflow { lambda });
        }
        let a = x.dist(&z);
        let zb = bracket(z.norm());
        let dg = lambda_derivative(|l| aux_split(l, x, z).map(|s| s.g_plus).unwrap_or_default(), lambda, k)?;
        let df = lambda_derivative(|l| aux_split(l, x, z).map(|s| s.f_plus).unwrap_or_default(), lambda, k)?;
        let lk = lambda.powi(k as i32);
        let env_g = zb.powi(k as i32 + 1) / (a * lk);
        let env_f = zb / (bracket(x.norm()).min(a) * lk);
        sg = sg.max(dg.norm() / env_g);
        sf = sf.max(df.norm() / env_f);
    }
    Ok(EnvelopeCheck { sup_ratio_g: sg, sup_ratio_f: sf, derivative: k })
}

/// Angular average of R(μ⁴)(|x − y|) over |x| = r, |y| = r':
/// [e^{iμr>} sin(μr<) − e^{−μr>} sinh(μr<)] / (8πμ³ r r').
pub fn swave_resolvent(mu: C64, r: f64, rp: f64) -> C64 {
    let (a, b) = if r <= rp { (r, rp) } else { (rp, r) };
    if b == 0.0 {
        return C64::new(1.0, 1.0) / (8.0 * PI * mu);
    }
    let mb = mu.norm() * b;
    if mb < 0.5 {
        return swave_series(mu, a, b);
    }
    let ma = mu * a;
    let n = if ma.norm() > 0.1 {
        ((I * mu * (b + a)).exp() - (I * mu * (b - a)).exp()) / (2.0 * I * ma)
            - ((-mu * (b - a)).exp() - (-mu * (b + a)).exp()) / (2.0 * ma)
    } else {
        (I * mu * b).exp() * csinc(ma) - (-mu * b).exp() * csinhc(ma)
    };
    n / (8.0 * PI * mu * mu * b)
}

/// Angular average of R(μ⁴) at real μ = λ.
pub fn swave_resolvent_real(lambda: f64, r: f64, rp: f64, sign: Sign) -> C64 {
    let k = swave_resolvent(C64::new(lambda, 0.0), r, rp);
    match sign {
        Sign::Plus => k,
        Sign::Minus => k.conj(),
    }
}

/// Angular average of R⁺ − R⁻: i sin(λr) sin(λr') / (4πλ³ r r').
pub fn swave_difference(lambda: f64, r: f64, rp: f64) -> C64 {
    I * (sinc(lambda * r) * sinc(lambda * rp) / (4.0 * PI * lambda))
}

fn csinc(w: C64) -> C64 {
    let w2 = w * w;
    C64::new(1.0, 0.0) - w2 / 6.0 + w2 * w2 / 120.0 - w2 * w2 * w2 / 5040.0
}

fn csinhc(w: C64) -> C64 {
    let w2 = w * w;
    C64::new(1.0, 0.0) + w2 / 6.0 + w2 * w2 / 120.0 + w2 * w2 * w2 / 5040.0
}

/// Power series of the averaged kernel for |μ| r> < 1/2.
fn swave_series(mu: C64, a: f64, b: f64) -> C64 {
    const N: usize = 22;
    let mut fact = [1.0f64; 2 * N + 2];
    for k in 1..fact.len() {
        fact[k] = fact[k - 1] * k as f64;
    }
    // c_n / b for n = 1..N
    let mut coeffs = [C64::new(0.0, 0.0); N + 1];
    for (n, slot) in coeffs.iter_mut().enumerate().skip(1) {
        let mut c = C64::new(0.0, 0.0);
        for j in 0..=n / 2 {
            let k = n - 2 * j;
            let sj = if j % 2 == 0 { 1.0 } else { -1.0 };
            let ik = I.powi(k as i32);
            let bk1 = if k == 0 { 0.0 } else { b.powi(k as i32 - 1) };
            let mk = if k % 2 == 0 { 1.0 } else { -1.0 };
            let a2j = a.powi(2 * j as i32);
            let term = if k == 0 {
                // (−1)^j − 1 vanishes for even j; for odd j it is −2 a^{2j}/b
                C64::new((sj - 1.0) * a2j / b, 0.0)
            } else {
                (ik * sj - mk) * (bk1 * a2j)
            };
            c += term / (fact[k] * fact[2 * j + 1]);
        }
        *slot = c;
    }
    // Σ c_n μ^{n−2} / (8π b) = (c_1/μ + Σ_{n≥2} c_n μ^{n−2}) / (8π)
    let mut acc = C64::new(0.0, 0.0);
    for n in (2..=N).rev() {
        acc = acc * mu + coeffs[n];
    }
    (coeffs[1] / mu + acc) / (8.0 * PI)
}

/// Spectral reconstruction of a radial function from the jump of the free
/// resolvent, u(r) = (2/(πi)) ∫ λ³ [(R⁺ − R⁻)u](r) dλ, evaluated through the
/// sine transform S_u(λ) = ∫ ρ sin(λρ) u(ρ) dρ.
pub fn stone_reconstruct(u: impl Fn(f64) -> f64, r: f64, lambda_max: f64, grid: &RadialGrid) -> f64 {
    let su = |l: f64| -> f64 { grid.nodes.iter().zip(&grid.weights_1d).map(|(p, w)| w * p * (l * p).sin() * u(*p)).sum() };
    let scale = r + grid.radius;
    let panels = crate::geometry::LambdaPanels::new(0.0, lambda_max, scale, 16).expect("valid range");
    // λ³ (R⁺ − R⁻)u(r) = i λ sinc(λr) S_u(λ)
    2.0 / PI * panels.integrate_real(|l| l * sinc(l * r) * su(l))
}
