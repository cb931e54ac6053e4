//! The oscillatory integral
//! A₀₀(x, y) = ∫₀^∞ (e^{iλ|x|} − e^{−λ|x|})(e^{iλ|y|} − e^{−iλ|y|}) χ(λ) dλ / (|x||y|),
//! its integrated-by-parts form, the singular kernel Ã and its action on
//! radial profiles.
//!
//! Writing the product as Σ s_k e^{c_kλ} with c = (i(a+b), i(a−b), −a+ib, −a−ib)
//! and s = (+, −, −, +), one integration by parts gives
//! A₀₀ = −(1/ab) Σ s_k/c_k − (1/ab) Σ (s_k/c_k) ∫ e^{c_kλ} χ′(λ) dλ.
//! The boundary term equals −4ia/(a⁴ − b⁴) = −Ã(a, b). The remainder is
//! evaluated as Σ s_k/c_k − ∫ χ′ λ Σ s_k E(c_kλ) dλ with E(w) = (e^w − 1)/w,
//! which avoids the 1/c_k cancellations for small |x|, |y|. Exponents with
//! |c_k|λ₀ < 10⁻³ (only c₂ = i(a − b), near the diagonal) are kept out of
//! the boundary term.

use serde::{Deserialize, Serialize};

use super::cutoff::SpectralCutoff;
use crate::error::{Error, Result};
use crate::free_resolvent::{expm1_over, sinc};
use crate::geometry::{LambdaPanels, Point3, RadialGrid};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

fn exponents(a: f64, b: f64) -> [C64; 4] {
    [C64::new(0.0, a + b), C64::new(0.0, a - b), C64::new(-a, b), C64::new(-a, -b)]
}

/// χ(λ)·(e^{iλa} − e^{−λa})(e^{iλb} − e^{−iλb})/(ab), evaluated without
/// cancellation for small λa, λb.
pub fn a00_integrand(cutoff: &SpectralCutoff, lambda: f64, a: f64, b: f64) -> C64 {
    let first = I * expm1_over(I * (lambda * a)) + expm1_over(C64::new(-lambda * a, 0.0));
    let second = 2.0 * I * sinc(lambda * b);
    first * second * (lambda * lambda * cutoff.chi(lambda))
}

fn panels(cutoff: &SpectralCutoff, a: f64, b: f64) -> LambdaPanels {
    cutoff.low_panels(a + b, 16)
}

/// Direct λ-quadrature of A₀₀ and the change under panel refinement.
pub fn a00_direct(a: f64, b: f64, cutoff: &SpectralCutoff) -> Result<(C64, f64)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidInput("A₀₀ needs |x|, |y| > 0".into()));
    }
    let p = panels(cutoff, a, b);
    let f = |l: f64| a00_integrand(cutoff, l, a, b);
    let v = p.integrate(f);
    let fine = p.refined().integrate(f);
    let scale = p.integrate_real(|l| f(l).norm());
    let err = (fine - v).norm();
    if err > 1e-10 * scale.max(fine.norm()) {
        return Err(Error::QuadratureNotConverged { change: err / fine.norm() });
    }
    Ok((fine, err))
}

/// Boundary and χ′-remainder terms of the integrated-by-parts form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A00Decomposition {
    pub boundary: C64,
    pub remainder: C64,
}

impl A00Decomposition {
    pub fn total(&self) -> C64 {
        self.boundary + self.remainder
    }
}

pub fn a00_decomposed(a: f64, b: f64, cutoff: &SpectralCutoff) -> Result<A00Decomposition> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidInput("A₀₀ needs |x|, |y| > 0".into()));
    }
    let l0 = cutoff.lambda0;
    let p = cutoff.transition_panels(a + b, 2.0, 24);
    let c = exponents(a, b);
    let mut boundary = C64::new(0.0, 0.0);
    for k in 0..4 {
        if c[k].norm() * l0 >= 1e-3 {
            boundary -= SIGNS[k] / c[k];
        }
    }
    // −Σ(s/c)∫e^{cλ}χ′ = Σ s/c − ∫χ′ λ Σ s E(cλ), E(w) = (e^w − 1)/w
    let total: C64 = p
        .nodes
        .iter()
        .zip(&p.weights)
        .map(|(&l, &w)| {
            let e: C64 = (0..4).map(|k| expm1_over(c[k] * l) * SIGNS[k]).sum();
            e * (-w * l * cutoff.dchi(l))
        })
        .sum();
    Ok(A00Decomposition { boundary: boundary / (a * b), remainder: (total - boundary) / (a * b) })
}

/// Both routes at once, for points in ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A00Kernel {
    pub direct: C64,
    pub quad_err: f64,
    pub decomposition: A00Decomposition,
}

impl A00Kernel {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.decomposition.total()).norm() / self.direct.norm()
    }
}

pub fn a00_kernel(x: Point3, y: Point3, cutoff: &SpectralCutoff) -> Result<A00Kernel> {
    let (a, b) = (x.norm(), y.norm());
    let (direct, quad_err) = a00_direct(a, b, cutoff)?;
    Ok(A00Kernel { direct, quad_err, decomposition: a00_decomposed(a, b, cutoff)? })
}

/// A_{z,w}(x, y): the same integral with |x − z| and |y − w| in place of
/// |x|, |y|.
pub fn a_zw(x: Point3, y: Point3, z: Point3, w: Point3, cutoff: &SpectralCutoff) -> Result<C64> {
    Ok(a00_direct(x.dist(&z), y.dist(&w), cutoff)?.0)
}

/// Ã(x, y) = 4i|x| / (|x|⁴ − |y|⁴).
pub fn tilde_a(a: f64, b: f64) -> C64 {
    C64::new(0.0, 4.0 * a / (a.powi(4) - b.powi(4)))
}

/// Fast A₀₀ through J(c) = ∫ e^{cλ}χ(λ) dλ = λ₀(e^{cλ₀} − 1)/(cλ₀) + transition
/// quadrature, used when many (a, b) pairs share one cut-off.
#[derive(Debug, Clone)]
pub struct A00Evaluator {
    cutoff: SpectralCutoff,
    nodes: Vec<f64>,
    weights_chi: Vec<f64>,
    small: (Vec<f64>, Vec<f64>),
}

impl A00Evaluator {
    /// `max_scale` bounds a + b over the pairs to be evaluated.
    pub fn new(cutoff: SpectralCutoff, max_scale: f64) -> Self {
        let p = cutoff.transition_panels(max_scale, 2.0, 24);
        let weights_chi = p.nodes.iter().zip(&p.weights).map(|(l, w)| w * cutoff.chi(*l)).collect();
        let small = cutoff.low_panels(1.0, 24);
        Self { cutoff, nodes: p.nodes, weights_chi, small: (small.nodes, small.weights) }
    }

    fn j(&self, c: C64) -> C64 {
        let l0 = self.cutoff.lambda0;
        let head = expm1_over(c * l0) * l0;
        let tail: C64 = self.nodes.iter().zip(&self.weights_chi).map(|(l, w)| (c * l).exp() * *w).sum();
        head + tail
    }

    pub fn value(&self, a: f64, b: f64) -> C64 {
        if a * b < 0.05 {
            // the exponential sums cancel to O(ab); integrate the stable form
            let (n, w) = &self.small;
            return n.iter().zip(w).map(|(l, w)| a00_integrand(&self.cutoff, *l, a, b) * *w).sum();
        }
        let c = exponents(a, b);
        let s: C64 = (0..4).map(|k| self.j(c[k]) * SIGNS[k]).sum();
        s / (a * b)
    }
}

/// Norm ratio ‖Ãu‖_p / ‖u‖_p for a radial profile, with the kernel restricted
/// to ||x| − |y|| > 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TildeAReport {
    pub p: f64,
    pub ratio: f64,
    pub norm_in: f64,
    pub norm_out: f64,
    /// Exponent (p − 1)/4 of the weight after the substitution s = |x|⁴.
    pub weight_exponent: f64,
    pub in_muckenhoupt_range: bool,
}

/// ‖·‖_p of a radial profile in ℝ³.
fn lp_radial(grid: &RadialGrid, values: &[f64], p: f64) -> f64 {
    grid.weights.iter().zip(values).map(|(w, v)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Ãu(X) = ∫_{|ρ−X|>1} 4iX/(X⁴ − ρ⁴) u(ρ) 4πρ² dρ for u given on `input`,
/// evaluated on `output`; returns the imaginary part (Ãu is purely imaginary
/// for real u).
pub fn tilde_a_profile(u: &dyn Fn(f64) -> f64, input_radius: f64, output: &RadialGrid, order: usize) -> Vec<f64> {
    output
        .nodes
        .iter()
        .map(|&x| {
            let mut breaks = vec![0.0];
            for e in [x - 1.0, x + 1.0] {
                if e > 0.0 && e < input_radius {
                    breaks.push(e);
                }
            }
            breaks.push(input_radius);
            let mut total = 0.0;
            for w in breaks.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                if (mid - x).abs() <= 1.0 {
                    continue;
                }
                let n = ((w[1] - w[0]) / 0.5).ceil().max(1.0) as usize;
                let g = RadialGrid::from_edges(&(0..=n).map(|k| w[0] + (w[1] - w[0]) * k as f64 / n as f64).collect::<Vec<_>>(), order)
                    .expect("increasing edges");
                total += g.nodes.iter().zip(&g.weights).map(|(r, wt)| wt * u(*r) * 4.0 * x / (x.powi(4) - r.powi(4))).sum::<f64>();
            }
            total
        })
        .collect()
}

pub fn tilde_a_apply(u: &dyn Fn(f64) -> f64, input_radius: f64, p: f64, output: &RadialGrid, order: usize) -> Result<TildeAReport> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("p must lie in (1, ∞), got {p}")));
    }
    let out = tilde_a_profile(u, input_radius, output, order);
    let input = RadialGrid::new(input_radius, 0.25, order)?;
    let uv: Vec<f64> = input.nodes.iter().map(|r| u(*r)).collect();
    let norm_in = lp_radial(&input, &uv, p);
    let norm_out = lp_radial(output, &out, p);
    let weight_exponent = (p - 1.0) / 4.0;
    Ok(TildeAReport {
        p,
        ratio: norm_out / norm_in,
        norm_in,
        norm_out,
        weight_exponent,
        in_muckenhoupt_range: weight_exponent > -1.0 && weight_exponent < p - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut() -> SpectralCutoff {
        SpectralCutoff::new(0.1).unwrap()
    }

    #[test]
    fn routes_agree_at_unit_radii_offset() {
        let (d, _) = a00_direct(1.0, 1.3, &cut()).unwrap();
        let dec = a00_decomposed(1.0, 1.3, &cut()).unwrap();
        assert!((d - dec.total()).norm() < 1e-8 * d.norm());
    }

    #[test]
    fn routes_agree_on_a_lattice() {
        let radii = crate::geometry::logspace(0.1, 50.0, 10);
        for l0 in [0.1, 0.03] {
            let cut = SpectralCutoff::new(l0).unwrap();
            for &a in &radii {
                for &b in &radii {
                    let (d, _) = a00_direct(a, b, &cut).unwrap();
                    let dec = a00_decomposed(a, b, &cut).unwrap();
                    assert!((d - dec.total()).norm() < 1e-8 * d.norm(), "{l0} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn routes_agree_on_the_diagonal() {
        for &a in &[0.1, 1.0, 7.0, 50.0] {
            let (d, _) = a00_direct(a, a, &cut()).unwrap();
            let dec = a00_decomposed(a, a, &cut()).unwrap();
            assert!((d - dec.total()).norm() < 1e-8 * d.norm(), "{a}");
        }
    }

    #[test]
    fn boundary_term_is_minus_tilde_a() {
        for &(a, b) in &[(3.0, 1.0), (0.5, 4.0), (20.0, 7.0)] {
            let dec = a00_decomposed(a, b, &cut()).unwrap();
            assert!((dec.boundary + tilde_a(a, b)).norm() < 1e-12 * tilde_a(a, b).norm());
        }
    }

    #[test]
    fn fast_evaluator_matches_direct() {
        let ev = A00Evaluator::new(cut(), 30.0);
        for &(a, b) in &[(0.01, 0.02), (0.3, 0.3), (1.0, 2.5), (12.0, 3.0), (0.2, 14.0)] {
            let (d, _) = a00_direct(a, b, &cut()).unwrap();
            assert!((ev.value(a, b) - d).norm() < 1e-10 * d.norm(), "{a} {b}");
        }
    }

    #[test]
    fn translation_covariance() {
        let (x, y) = (Point3::new(0.3, 1.0, -0.2), Point3::new(2.0, 0.1, 0.4));
        let (z, w) = (Point3::new(0.1, 0.2, 0.3), Point3::new(-0.5, 0.0, 0.9));
        let lhs = a_zw(x, y, z, w, &cut()).unwrap();
        let rhs = a00_direct((x - z).norm(), (y - w).norm(), &cut()).unwrap().0;
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn tilde_a_vanishes_on_separated_supports() {
        let u = |r: f64| if r <= 0.5 { 1.0 } else { 0.0 };
        let out = RadialGrid::new(0.5, 0.25, 8).unwrap();
        assert!(tilde_a_profile(&u, 0.5, &out, 8).iter().all(|v| *v == 0.0));
    }
}
