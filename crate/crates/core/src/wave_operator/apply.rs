//! Action of the wave operators on radial functions.
//!
//! For radial u the stationary representation collapses to
//! W₊u(r) = u(r) − (2/π) ∫ S_u(λ) Σ_i R̄⁺(r, z_i) d_i (Γ(λ)s(λ))_i dλ,
//! with S_u(λ) = ∫ ρ sin(λρ) u(ρ) dρ, s_j = d_j sin(λz_j)/z_j and Γ the
//! piece of M̃⁺(λ)⁻¹ selected by the parts. Coefficients are recomputed at
//! every λ-node; outputs beyond the potential support use the far-field pair.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cutoff::SpectralCutoff;
use crate::error::{Error, Result};
use crate::free_resolvent::swave_resolvent;
use crate::geometry::{logspace, LambdaPanels, RadialGrid};
use crate::linalg::{CMat, CVec};
use crate::m_matrix::{expand_system, ExpansionOptions, Lambda0Policy, MExpansion};
use crate::radial::{swave_apply, RadialChannel};
use crate::C64;

/// Largest |S_u(Λ)| relative to its peak accepted as a negligible tail.
const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavePart {
    LowQ,
    LowM1,
    LowErr,
    HighBorn,
    HighRemainder,
}

impl WavePart {
    pub const ALL: [WavePart; 5] = [WavePart::LowQ, WavePart::LowM1, WavePart::LowErr, WavePart::HighBorn, WavePart::HighRemainder];

    pub fn label(&self) -> &'static str {
        match self {
            WavePart::LowQ => "low_q",
            WavePart::LowM1 => "low_m1",
            WavePart::LowErr => "low_err",
            WavePart::HighBorn => "high_born",
            WavePart::HighRemainder => "high_remainder",
        }
    }

    fn is_low(&self) -> bool {
        matches!(self, WavePart::LowQ | WavePart::LowM1 | WavePart::LowErr)
    }
}

/// Samples of a radial function on the nodes of a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub grid: RadialGrid,
    pub values: Vec<C64>,
}

impl RadialFunction {
    pub fn new(grid: RadialGrid, values: Vec<C64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(format!("{} samples on a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    /// L²(ℝ³) norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().zip(&self.grid.weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// L² norm of the restriction to r ≤ radius.
    pub fn norm_within(&self, radius: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.grid.nodes)
            .filter(|(_, r)| **r <= radius)
            .map(|((v, w), _)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn conj(&self) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v.conj()).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// S_u(λ) = ∫ ρ sin(λρ) u(ρ) dρ.
    pub fn sine_transform(&self, lambda: f64) -> C64 {
        let g = &self.grid;
        g.nodes.iter().zip(&g.weights_1d).zip(&self.values).map(|((r, w), v)| v * (w * r * (lambda * r).sin())).sum()
    }
}

/// W₊ on the radial channel of a potential.
pub struct WaveOperator<'a> {
    channel: &'a RadialChannel,
    exp: MExpansion,
    cutoff: SpectralCutoff,
    lambda_max: f64,
    order: usize,
}

impl<'a> WaveOperator<'a> {
    pub fn new(channel: &'a RadialChannel, lambda0: Lambda0Policy, lambda_max: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::InvalidInput(format!("Λ must be positive, got {lambda_max}")));
        }
        let opts = ExpansionOptions { lambda0, ..ExpansionOptions::default() };
        let exp = expand_system(&channel.system, &logspace(1e-3, 1e-1, 8), opts)?;
        let cutoff = SpectralCutoff::new(exp.lambda0)?;
        if !(lambda_max > cutoff.support_end()) {
            return Err(Error::InvalidInput(format!("Λ = {lambda_max} inside the low-energy window")));
        }
        Ok(Self { channel, exp, cutoff, lambda_max, order: 16 })
    }

    pub fn expansion(&self) -> &MExpansion {
        &self.exp
    }

    pub fn cutoff(&self) -> SpectralCutoff {
        self.cutoff
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    fn panels(&self, u: &RadialFunction) -> Result<LambdaPanels> {
        let scale = 2.0 * u.grid.radius.max(self.channel.grid.radius) + 2.0 * self.channel.grid.radius;
        let mut breaks = self.cutoff.breaks();
        breaks.push(self.lambda_max);
        LambdaPanels::piecewise(&breaks, scale, PI, self.order)
    }

    /// d ∘ Γ(λ)s summed over the selected parts, each with its cut-off.
    fn coefficients(&self, lambda: f64, parts: &[WavePart]) -> Result<Vec<C64>> {
        let n = self.channel.len();
        let chi = self.cutoff.chi(lambda);
        let chi_t = 1.0 - chi;
        let s = self.channel.jump_source(lambda);
        let sc: Vec<C64> = s.iter().map(|&x| C64::new(x, 0.0)).collect();
        let sv = CVec::from_column_slice(&sc);
        let low = |m: &CMat| -> CVec { m * &sv };
        let needs_full = parts.iter().any(|p| matches!(p, WavePart::LowErr | WavePart::HighRemainder))
            && ((chi > 0.0 && parts.contains(&WavePart::LowErr)) || (chi_t > 0.0 && parts.contains(&WavePart::HighRemainder)));
        let full = if needs_full { Some(CVec::from_vec(self.channel.solve_m(lambda, &sc)?)) } else { None };
        let born = CVec::from_iterator(n, s.iter().zip(self.channel.u()).map(|(s, u)| C64::new(s * u, 0.0)));

        let mut g = CVec::zeros(n);
        for p in parts {
            let w = if p.is_low() { chi } else { chi_t };
            if w == 0.0 {
                continue;
            }
            let term = match p {
                WavePart::LowQ => low(&self.exp.qd0q),
                WavePart::LowM1 => low(&self.exp.m1) * C64::new(lambda, 0.0),
                WavePart::LowErr => full.as_ref().unwrap() - low(&self.exp.qd0q) - low(&self.exp.m1) * C64::new(lambda, 0.0),
                WavePart::HighBorn => born.clone(),
                WavePart::HighRemainder => full.as_ref().unwrap() - &born,
            };
            g += term * C64::new(w, 0.0);
        }
        Ok(g.iter().zip(self.channel.d()).map(|(g, d)| g * d).collect())
    }

    /// u plus the selected parts of W₊ − I applied to u, on the grid of u.
    pub fn apply(&self, u: &RadialFunction, parts: &[WavePart]) -> Result<RadialFunction> {
        use rayon::prelude::*;
        let panels = self.panels(u)?;
        let big_r = self.channel.grid.radius;
        let split = u.grid.nodes.partition_point(|&r| r < big_r);
        let inner = &u.grid.nodes[..split];
        let outer = &u.grid.nodes[split..];

        let peak = panels.nodes.iter().map(|&l| u.sine_transform(l).norm()).fold(0.0, f64::max);
        let tail = u.sine_transform(self.lambda_max).norm();
        if peak > 0.0 && tail > TAIL_TOLERANCE * peak {
            return Err(Error::QuadratureNotConverged { change: tail / peak });
        }

        let zero = C64::new(0.0, 0.0);
        let contributions = panels
            .nodes
            .par_iter()
            .zip(&panels.weights)
            .map(|(&l, &w)| -> Result<Vec<C64>> {
                let su = u.sine_transform(l) * w;
                let c = self.coefficients(l, parts)?;
                let mut out = swave_apply(l, inner, self.channel.nodes(), &c);
                let ff = self.channel.far_field(l, &c);
                out.extend(outer.iter().map(|&r| self.channel.far_profile(l, ff, r)));
                out.iter_mut().for_each(|v| *v *= su);
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = vec![zero; u.grid.len()];
        for c in contributions {
            acc.iter_mut().zip(c).for_each(|(a, c)| *a += c);
        }
        let values = u.values.iter().zip(acc).map(|(u, a)| u - a * (2.0 / PI)).collect();
        Ok(RadialFunction { grid: u.grid.clone(), values })
    }

    /// W₋u = conj(W₊ conj u), part by part.
    pub fn apply_minus(&self, u: &RadialFunction, parts: &[WavePart]) -> Result<RadialFunction> {
        Ok(self.apply(&u.conj(), parts)?.conj())
    }
}

/// W₋u from the full W₊.
pub fn w_minus_from_w_plus(op: &WaveOperator, u: &RadialFunction) -> Result<RadialFunction> {
    op.apply_minus(u, &WavePart::ALL)
}

/// R₀(z)f on the grid of f, z = μ⁴ with Im μ > 0 or μ real.
pub fn free_resolvent_apply(mu: C64, f: &RadialFunction) -> RadialFunction {
    let g = &f.grid;
    let wf: Vec<C64> = f.values.iter().zip(&g.weights).map(|(v, w)| v * w).collect();
    let values = g.nodes.iter().map(|&r| g.nodes.iter().zip(&wf).map(|(&p, v)| swave_resolvent(mu, r, p) * v).sum()).collect();
    RadialFunction { grid: g.clone(), values }
}

/// R_V(z)f = R₀f − R₀ D M̃(μ)⁻¹ D R₀f, from the channel's Nyström system.
pub fn perturbed_resolvent_apply(channel: &RadialChannel, mu: C64, f: &RadialFunction) -> Result<RadialFunction> {
    let free = free_resolvent_apply(mu, f);
    let g = &f.grid;
    let z = channel.nodes();
    let d = channel.d();
    let rhs: Vec<C64> = z
        .iter()
        .zip(d)
        .map(|(&zi, di)| {
            g.nodes.iter().zip(&g.weights).zip(&f.values).map(|((&p, w), v)| swave_resolvent(mu, zi, p) * v * w).sum::<C64>() * *di
        })
        .collect();
    let m = channel.system.m_sym(mu);
    let q = m.lu().solve(&CVec::from_vec(rhs)).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    let dq: Vec<C64> = q.iter().zip(d).map(|(q, d)| q * d).collect();
    let values = g
        .nodes
        .iter()
        .zip(&free.values)
        .map(|(&r, v)| v - z.iter().zip(&dq).map(|(&zi, c)| swave_resolvent(mu, r, zi) * c).sum::<C64>())
        .collect();
    Ok(RadialFunction { grid: g.clone(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    pub z: C64,
    pub compare_radius: f64,
    pub relative_error: f64,
}

/// ‖R_V(z)W₊u − W₊R₀(z)u‖ / ‖R_V(z)W₊u‖ on r ≤ `compare_radius`.
pub fn intertwining_check(op: &WaveOperator, u: &RadialFunction, z: C64, compare_radius: f64) -> Result<IntertwiningReport> {
    let mu = z.powf(0.25);
    let wu = op.apply(u, &WavePart::ALL)?;
    let lhs = perturbed_resolvent_apply(op.channel, mu, &wu)?;
    let rhs = op.apply(&free_resolvent_apply(mu, u), &WavePart::ALL)?;
    let relative_error = lhs.sub(&rhs).norm_within(compare_radius) / lhs.norm_within(compare_radius);
    Ok(IntertwiningReport { z, compare_radius, relative_error })
}

/// Dense kernel of W₊ − I on a small output grid, for inspection.
pub fn wave_kernel_matrix(op: &WaveOperator, grid: &RadialGrid, parts: &[WavePart]) -> Result<CMat> {
    let n = grid.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[j] = C64::new(1.0 / grid.weights[j], 0.0);
        let u = RadialFunction::new(grid.clone(), e)?;
        let w = op.apply(&u, parts)?;
        for i in 0..n {
            k[(i, j)] = w.values[i] - u.values[i];
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Potential;

    fn packet(grid: &RadialGrid) -> RadialFunction {
        RadialFunction::from_fn(grid.clone(), |r| C64::new((-0.5 * r * r).exp(), 0.0))
    }

    #[test]
    fn conjugation_identities() {
        let ch = RadialChannel::resolving(&Potential::gaussian_well(0.3), 8.0).unwrap();
        let op = WaveOperator::new(&ch, Lambda0Policy::default(), 10.0).unwrap();
        let g = RadialGrid::new(20.0, 1.0, 16).unwrap();
        let u = packet(&g);
        let wp = op.apply(&u, &WavePart::ALL).unwrap();
        let wm = w_minus_from_w_plus(&op, &u).unwrap();
        for (a, b) in wm.values.iter().zip(&wp.values) {
            assert!((a - b.conj()).norm() < 1e-15);
        }
        let iu = u.scale(C64::new(0.0, 1.0));
        let wm_i = w_minus_from_w_plus(&op, &iu).unwrap();
        for (a, b) in wm_i.values.iter().zip(&wp.values) {
            assert!((a - C64::new(0.0, 1.0) * b.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn parts_add_up() {
        let ch = RadialChannel::resolving(&Potential::gaussian_well(0.3), 8.0).unwrap();
        let op = WaveOperator::new(&ch, Lambda0Policy::default(), 10.0).unwrap();
        let g = RadialGrid::new(20.0, 1.0, 16).unwrap();
        let u = packet(&g);
        let all = op.apply(&u, &WavePart::ALL).unwrap();
        let mut sum = u.values.clone();
        for p in WavePart::ALL {
            let w = op.apply(&u, &[p]).unwrap();
            sum.iter_mut().zip(w.values.iter().zip(&u.values)).for_each(|(s, (w, u))| *s += w - u);
        }
        let scale = all.norm();
        let diff = RadialFunction::new(g, sum).unwrap().sub(&all).norm();
        assert!(diff < 1e-12 * scale, "{diff}");
    }
}
