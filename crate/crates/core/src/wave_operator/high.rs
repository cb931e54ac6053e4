//! High-energy kernels on radial profiles.
//!
//! Both pieces of ∫ λ³χ̃(λ) R⁺ v Γ v (R⁺ − R⁻)(λ⁴) dλ are evaluated in the
//! s-wave channel: Γ = U gives the Born term, truncated by χ(λ/L), and
//! Γ = M̃⁻¹ − U the remainder. Since D(R̄⁺ − R̄⁻)(·, r) = i sin(λr)/(4πλ³r)·s
//! the λ³ cancels and each λ-node costs one solve and one semiseparable
//! product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cutoff::SpectralCutoff;
use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::geometry::{bracket, LambdaPanels, PanelTable, RadialGrid};
use crate::potentials::Potential;
use crate::radial::{swave_apply, RadialChannel};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const PIECES: usize = 8;

/// i sin(λr)/(4πr), continuous at r = 0.
fn y_factor(lambda: f64, r: f64) -> C64 {
    let v = if r * lambda < 1e-8 { lambda } else { (lambda * r).sin() / r };
    I * (v / (4.0 * PI))
}

/// Breakpoints resolving χ̃ at λ₀ and χ(·/L) for every L, up to `end`.
fn breaks(cutoff: &SpectralCutoff, ladder: &[f64], end: f64) -> Vec<f64> {
    let mut b: Vec<f64> = Vec::new();
    let mut push_transition = |start: f64| {
        for k in 0..=PIECES {
            b.push(start * (1.0 + k as f64 / PIECES as f64));
        }
    };
    push_transition(cutoff.lambda0);
    for &l in ladder {
        push_transition(l);
    }
    b.push(end);
    b.retain(|x| *x <= end);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-12 * c.abs().max(1.0));
    b
}

/// Kernel values on a product of radial samples, row-major in x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductKernel {
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub values: Vec<C64>,
    /// Change under halving every λ-panel, when computed.
    pub quad_err: Option<Vec<f64>>,
    pub lambda_max: f64,
    /// Bound on the discarded λ > Λ_max part from a fitted Cλ⁻⁴ envelope.
    pub tail_bound: f64,
}

impl ProductKernel {
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.ry.len() + j]
    }
}

/// Kernel on the midpoint grid r_k = (k + ½)h, row-major in x.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformKernel {
    pub h: f64,
    pub n: usize,
    pub values: Vec<C64>,
    pub lambda_max: f64,
}

impl UniformKernel {
    pub fn radius(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.n + j]
    }
}

/// Born-term values along an L-ladder with their successive differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub ladder: Vec<f64>,
    pub values: Vec<C64>,
    pub differences: Vec<f64>,
    pub slope: f64,
}

impl CauchyReport {
    pub fn value(&self) -> C64 {
        *self.values.last().unwrap()
    }
}

/// Max of |ψ̂_L(k)| / min(⟨log k⟩, k⁻³) over the sampled k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiHatReport {
    pub l: f64,
    pub ks: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub constant: f64,
}

/// Ratio of the exponential piece to e^{−a/2}⟨a⟩³/(a⟨b⟩³).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialPieceReport {
    pub samples: Vec<(f64, f64, f64)>,
    pub max_ratio: f64,
}

pub struct HighEnergyKernels<'a> {
    channel: &'a RadialChannel,
    potential: Potential,
    cutoff: SpectralCutoff,
    lambda_max: f64,
    phase: f64,
}

impl<'a> HighEnergyKernels<'a> {
    pub fn new(channel: &'a RadialChannel, cutoff: SpectralCutoff, lambda_max: f64) -> Result<Self> {
        if !(lambda_max > 2.0 * cutoff.lambda0) {
            return Err(Error::InvalidInput("Λ_max must exceed 2λ₀".into()));
        }
        Ok(Self { channel, potential: channel.split.potential, cutoff, lambda_max, phase: PI })
    }

    /// Panel phase in radians; the default is π.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    fn remainder_panels(&self, scale: f64) -> LambdaPanels {
        let b = breaks(&self.cutoff, &[], self.lambda_max);
        LambdaPanels::piecewise(&b, scale, self.phase, 16).expect("valid breakpoints")
    }

    /// c = D(Us − M̃⁻¹s): h_x(λ) = Σ_i R̄⁺(r_x, z_i) c_i.
    fn remainder_coeffs(&self, lambda: f64) -> Result<Vec<C64>> {
        let ch = self.channel;
        let s = ch.jump_source(lambda);
        let rhs: Vec<C64> = s.iter().map(|v| C64::new(*v, 0.0)).collect();
        let q = ch.solve_m(lambda, &rhs)?;
        Ok(q.iter().zip(&s).zip(ch.u().iter().zip(ch.d())).map(|((q, s), (u, d))| (C64::new(u * s, 0.0) - q) * *d).collect())
    }

    /// λ-integrand of the remainder at (r_x, r_y), without χ̃.
    pub fn remainder_integrand(&self, lambda: f64, rx: f64, ry: f64) -> Result<C64> {
        let c = self.remainder_coeffs(lambda)?;
        Ok(-swave_apply(lambda, &[rx], self.channel.nodes(), &c)[0] * y_factor(lambda, ry))
    }

    /// Table of (F, Ĝ) and, when some target lies inside the grid, the full
    /// coefficient vector, on panels resolving only the potential scale.
    fn remainder_table(&self, refine: bool, inner: &[f64]) -> Result<PanelTable> {
        let scale = 3.0 * self.channel.grid.radius;
        let mut p = self.remainder_panels(scale);
        if refine {
            p = p.refined();
        }
        self.channel.profile_table(p, inner, |l| self.remainder_coeffs(l))
    }

    fn remainder_sum(&self, table: &PanelTable, panels: &LambdaPanels, rx: &[f64], ry: &[f64]) -> (Vec<C64>, f64) {
        let ny = ry.len();
        let big_r = self.channel.grid.radius;
        let inner: Vec<usize> = (0..rx.len()).filter(|&i| rx[i] < big_r).collect();
        let n = panels.nodes.len();
        let chunks: Vec<(usize, usize)> = (0..n).step_by(256).map(|a| (a, (a + 256).min(n))).collect();
        let parts: Vec<(Vec<C64>, f64)> = chunks
            .par_iter()
            .map(|&(a, b)| {
                let mut acc = vec![C64::new(0.0, 0.0); rx.len() * ny];
                let mut env: f64 = 0.0;
                let mut h = vec![C64::new(0.0, 0.0); rx.len()];
                for k in a..b {
                    let (l, w) = (panels.nodes[k], panels.weights[k]);
                    let ct = self.cutoff.chi_tilde(l);
                    if ct == 0.0 {
                        continue;
                    }
                    let v = table.eval(l);
                    for (i, &r) in rx.iter().enumerate() {
                        if r >= big_r {
                            h[i] = self.channel.far_profile(l, (v[0], v[1]), r);
                        }
                    }
                    for (k, &i) in inner.iter().enumerate() {
                        h[i] = v[2 + k];
                    }
                    let fy: Vec<C64> = ry.iter().map(|r| y_factor(l, *r)).collect();
                    if l >= 0.5 * self.lambda_max {
                        let hm = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
                        let fm = fy.iter().map(|z| z.norm()).fold(0.0, f64::max);
                        env = env.max(hm * fm * l.powi(4));
                    }
                    let scale = -w * ct;
                    for (i, hx) in h.iter().enumerate() {
                        let hs = hx * scale;
                        let row = &mut acc[i * ny..(i + 1) * ny];
                        for (o, f) in row.iter_mut().zip(&fy) {
                            *o += hs * f;
                        }
                    }
                }
                (acc, env)
            })
            .collect();
        // fixed-order reduction
        let mut total = vec![C64::new(0.0, 0.0); rx.len() * ny];
        let mut env: f64 = 0.0;
        for (p, e) in parts {
            total.iter_mut().zip(&p).for_each(|(t, v)| *t += v);
            env = env.max(e);
        }
        (total, env)
    }

    /// Remainder kernel on rx × ry. The solves are tabulated on panels
    /// resolving the potential and interpolated onto panels resolving
    /// e^{iλ(r_x ± r_y)}. With `refine`, both panel sets are halved and the
    /// change is reported.
    pub fn remainder_kernel(&self, rx: &[f64], ry: &[f64], refine: bool) -> Result<ProductKernel> {
        if rx.iter().chain(ry).any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidInput("radii must be non-negative".into()));
        }
        let inner: Vec<f64> = rx.iter().copied().filter(|&r| r < self.channel.grid.radius).collect();
        let scale = rx.iter().chain(ry).fold(0.0f64, |m, r| m.max(*r)) * 2.0 + 2.0 * self.channel.grid.radius;
        let p = self.remainder_panels(scale);
        let table = self.remainder_table(false, &inner)?;
        let (values, env) = self.remainder_sum(&table, &p, rx, ry);
        let (values, quad_err) = if refine {
            let fine_table = self.remainder_table(true, &inner)?;
            let (fine, _) = self.remainder_sum(&fine_table, &p.refined(), rx, ry);
            let err = fine.iter().zip(&values).map(|(f, c)| (f - c).norm()).collect();
            (fine, Some(err))
        } else {
            (values, None)
        };
        Ok(ProductKernel {
            rx: rx.to_vec(),
            ry: ry.to_vec(),
            values,
            quad_err,
            lambda_max: self.lambda_max,
            tail_bound: env / (3.0 * self.lambda_max.powi(3)),
        })
    }

    /// Remainder kernel on the midpoint grid r_k = (k + ½)h, k < n, for Schur
    /// sums over nested domains. For r_x ≥ R the main part depends on r_x ± r_y
    /// only and comes from a one-dimensional transform Φ̂(mh); the e^{−λ(r_x−R)}
    /// part and the rows with r_x < R are accumulated as real matrix products
    /// over λ-chunks, dropping rows once λ(r_x − R) > 40.
    pub fn remainder_kernel_uniform(&self, h: f64, n: usize) -> Result<UniformKernel> {
        if !(h > 0.0) || n == 0 {
            return Err(Error::InvalidInput("uniform grid needs h > 0 and n ≥ 1".into()));
        }
        let big_r = self.channel.grid.radius;
        let r: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
        let n_in = r.iter().filter(|&&x| x < big_r).count();
        let table = self.remainder_table(false, &r[..n_in])?;
        let panels = self.remainder_panels(2.0 * r[n - 1] + 2.0 * big_r);
        let nl = panels.nodes.len();

        // Φ̂(mh), m ∈ [−n, 2n)
        let m_lo = -(n as i64);
        let n_m = 3 * n;
        let mut phi_hat = vec![C64::new(0.0, 0.0); n_m];
        let mut k_exp = vec![0.0f64; 2 * n * n];
        let mut k_in = vec![0.0f64; 2 * n_in * n];
        const CHUNK: usize = 1024;
        let mut start = 0;
        while start < nl {
            let end = (start + CHUNK).min(nl);
            let lam = &panels.nodes[start..end];
            let cw: Vec<f64> = lam.iter().zip(&panels.weights[start..end]).map(|(l, w)| w * self.cutoff.chi_tilde(*l)).collect();
            let vals: Vec<Vec<C64>> = lam.iter().map(|&l| table.eval(l)).collect();
            for (j, &l) in lam.iter().enumerate() {
                if cw[j] == 0.0 {
                    continue;
                }
                let phi = vals[j][0] * (cw[j] / l.powi(3));
                let step = C64::from_polar(1.0, l * h);
                let mut z = C64::new(0.0, 0.0);
                for (m, out) in phi_hat.iter_mut().enumerate() {
                    if m % 256 == 0 {
                        z = C64::from_polar(1.0, l * h * (m as i64 + m_lo) as f64);
                    }
                    *out += phi * z;
                    z *= step;
                }
            }
            // sin(λ r_y) for the chunk, rows λ, columns r_y
            let cols = end - start;
            let mut sines = nalgebra::DMatrix::<f64>::zeros(cols, n);
            for (j, &l) in lam.iter().enumerate() {
                let step = C64::from_polar(1.0, l * h);
                let mut z = C64::new(0.0, 0.0);
                for k in 0..n {
                    if k % 256 == 0 {
                        z = C64::from_polar(1.0, l * r[k]);
                    }
                    sines[(j, k)] = z.im;
                    z *= step;
                }
            }
            let l_min = lam[0];
            let active = r[n_in..].iter().take_while(|&&x| l_min * (x - big_r) <= 40.0).count();
            let rows = n_in + active;
            if rows > 0 {
                let mut a_re = nalgebra::DMatrix::<f64>::zeros(rows, cols);
                let mut a_im = nalgebra::DMatrix::<f64>::zeros(rows, cols);
                for (j, &l) in lam.iter().enumerate() {
                    if cw[j] == 0.0 {
                        continue;
                    }
                    for i in 0..n_in {
                        let v = vals[j][2 + i] * cw[j];
                        a_re[(i, j)] = v.re;
                        a_im[(i, j)] = v.im;
                    }
                    let psi = vals[j][1] * (cw[j] / l.powi(3));
                    for i in 0..active {
                        let v = psi * (-l * (r[n_in + i] - big_r)).exp();
                        a_re[(n_in + i, j)] = v.re;
                        a_im[(n_in + i, j)] = v.im;
                    }
                }
                let p_re = &a_re * &sines;
                let p_im = &a_im * &sines;
                for i in 0..rows {
                    let (dst, row) = if i < n_in { (&mut k_in, i) } else { (&mut k_exp, i) };
                    for k in 0..n {
                        dst[2 * (row * n + k)] += p_re[(i, k)];
                        dst[2 * (row * n + k) + 1] += p_im[(i, k)];
                    }
                }
            }
            start = end;
        }

        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let (rx, ry) = (r[i], r[k]);
                let idx = 2 * (i * n + k);
                values[i * n + k] = if i < n_in {
                    // −∫ c h_x i sin(λr_y)/(4πr_y)
                    -I * C64::new(k_in[idx], k_in[idx + 1]) / (4.0 * PI * ry)
                } else {
                    let plus = phi_hat[i + k + 1 + n];
                    let minus = phi_hat[(i as i64 - k as i64 - m_lo) as usize];
                    let main = -(plus - minus) / (64.0 * PI * PI * rx * ry);
                    let expo = I * C64::new(k_exp[idx], k_exp[idx + 1]) / (32.0 * PI * PI * rx * ry);
                    main + expo
                };
            }
        }
        Ok(UniformKernel { h, n, values, lambda_max: self.lambda_max })
    }

    /// Radial z-grid for the Born term with a panel edge at r_x, where R̄⁺(r_x, ·)
    /// has a kink.
    fn born_grid(&self, rx: f64, l_max: f64) -> Result<RadialGrid> {
        let radius = self.potential.support_radius();
        let width = (4.0 / (2.0 * l_max)).min(0.5);
        let mut edges: Vec<f64> = Vec::new();
        let n = (radius / width).ceil() as usize;
        for k in 0..=n {
            edges.push(radius * k as f64 / n as f64);
        }
        if rx > 0.0 && rx < radius {
            edges.push(rx);
            edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
            edges.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        }
        RadialGrid::from_edges(&edges, 8)
    }

    /// A⁺_L − A⁻_L at (r_x, r_y) for each L: the Born term with χ̃(λ)χ(λ/L).
    pub fn born_kernel(&self, rx: f64, ry: f64, ladder: &[f64]) -> Result<CauchyReport> {
        if ladder.len() < 2 || ladder.windows(2).any(|w| !(w[1] > w[0])) || ladder[0] <= 2.0 * self.cutoff.lambda0 {
            return Err(Error::InvalidInput("the L-ladder must increase and exceed 2λ₀".into()));
        }
        let l_max = *ladder.last().unwrap();
        let end = 2.0 * l_max;
        let g = self.born_grid(rx, l_max)?;
        let vw: Vec<f64> = g.nodes.iter().zip(&g.weights).map(|(z, w)| self.potential.radial(*z) * w).collect();
        let scale = rx + ry + 2.0 * g.radius;
        let p = LambdaPanels::piecewise(&breaks(&self.cutoff, ladder, end), scale, self.phase, 16)?;
        let integrand = |l: f64| -> C64 {
            let coeffs: Vec<C64> = g.nodes.iter().zip(&vw).map(|(z, v)| C64::new(v * (l * z).sin() / z, 0.0)).collect();
            swave_apply(l, &[rx], &g.nodes, &coeffs)[0] * y_factor(l, ry) * self.cutoff.chi_tilde(l)
        };
        let f: Vec<C64> = p.nodes.iter().map(|&l| integrand(l)).collect();
        let values: Vec<C64> = ladder
            .iter()
            .map(|&ll| p.nodes.iter().zip(&p.weights).zip(&f).map(|((l, w), v)| v * (w * self.cutoff.chi(l / ll))).sum())
            .collect();
        let differences: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        let slope = if differences.len() >= 2 { loglog_fit(&ladder[..differences.len()], &differences).slope } else { f64::NAN };
        if differences.len() >= 2 && !(slope < 0.0) {
            return Err(Error::NotCauchy { slope });
        }
        Ok(CauchyReport { ladder: ladder.to_vec(), values, differences, slope })
    }

    /// ψ̂_L(k) = ∫ ψ_L(λ) e^{iλk} dλ.
    pub fn psi_hat(&self, l: f64, k: f64) -> C64 {
        let p = LambdaPanels::piecewise(&breaks(&self.cutoff, &[l], 2.0 * l), k, self.phase, 16).expect("valid breakpoints");
        p.integrate(|x| C64::from_polar(self.cutoff.psi(x, l), x * k))
    }

    pub fn psi_hat_report(&self, l: f64, ks: &[f64]) -> PsiHatReport {
        let magnitudes: Vec<f64> = ks.iter().map(|&k| self.psi_hat(l, k).norm()).collect();
        let constant = ks.iter().zip(&magnitudes).map(|(k, m)| m / bracket(k.ln()).min(k.powi(-3))).fold(0.0, f64::max);
        PsiHatReport { l, ks: ks.to_vec(), magnitudes, constant }
    }
}

/// ∫ e^{iλb} e^{−λa} χ̃(λ)χ(λ/L)/λ dλ.
pub fn exponential_piece(cutoff: &SpectralCutoff, a: f64, b: f64, l: f64) -> C64 {
    let p = LambdaPanels::piecewise(&breaks(cutoff, &[l], 2.0 * l), b, PI, 16).expect("valid breakpoints");
    p.integrate(|x| C64::from_polar((-x * a).exp() * cutoff.psi(x, l), x * b))
}

/// Compares the exponential piece against e^{−a/2}⟨a⟩³/(a⟨b⟩³) on a lattice.
pub fn exponential_piece_check(cutoff: &SpectralCutoff, a_values: &[f64], b_values: &[f64], l: f64) -> ExponentialPieceReport {
    let mut samples = Vec::new();
    for &a in a_values {
        for &b in b_values {
            let v = exponential_piece(cutoff, a, b, l).norm();
            let env = (-a / 2.0).exp() * bracket(a).powi(3) / (a * bracket(b).powi(3));
            samples.push((a, b, v / env));
        }
    }
    let max_ratio = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    ExponentialPieceReport { samples, max_ratio }
}
