//! Radial (s-wave) channel of a radial potential.
//!
//! Kernels are averaged over both spheres |x| = r, |y| = r', so operators act
//! on radial profiles with the volume weights 4πr²dr. The averaged free
//! resolvent is semiseparable,
//! R̄⁺(r, r') = [e^{iλr>} sin(λr<) − e^{−λr>} sinh(λr<)] / (8πλ³ r r'),
//! which makes matrix-free products O(n + m) and lets the high-energy and
//! wave-operator paths avoid dense factorisations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::free_resolvent::swave_resolvent;
use crate::geometry::{bracket, LambdaPanels, PanelTable, RadialGrid};
use crate::linalg::{gmres, CMat};
use crate::m_matrix::{perturbed_resolvent_on, KernelMatrix, Route, ShellNodes, SymmetricSystem};
use crate::potentials::{Potential, PotentialSplit};
use crate::{Sign, C64};

/// Below this value of λ·r> pairs are evaluated in closed form instead of by
/// prefix sums, which cancel there.
const DIRECT_PRODUCT: f64 = 0.05;

/// Σ_j R̄⁺(λ; t_k, z_j) c_j for every target t_k, in O((n + m) log n).
pub fn swave_apply(lambda: f64, targets: &[f64], sources: &[f64], coeffs: &[C64]) -> Vec<C64> {
    assert_eq!(sources.len(), coeffs.len());
    let zero = C64::new(0.0, 0.0);
    let n = sources.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sources[a].partial_cmp(&sources[b]).unwrap());
    let z: Vec<f64> = order.iter().map(|&j| sources[j]).collect();
    let c: Vec<C64> = order.iter().map(|&j| coeffs[j]).collect();
    let y: Vec<C64> = z.iter().zip(&c).map(|(z, c)| if *z > 0.0 { c / z } else { zero }).collect();

    let mut f_sin = vec![zero; n];
    let mut f_acc = vec![zero; n];
    let mut f_e = vec![zero; n];
    let (mut s1, mut s2, mut s3) = (zero, zero, zero);
    for j in 0..n {
        s1 += y[j] * (lambda * z[j]).sin();
        s2 = if j == 0 { y[j] } else { s2 * (-lambda * (z[j] - z[j - 1])).exp() + y[j] };
        s3 += y[j] * (-lambda * z[j]).exp();
        f_sin[j] = s1;
        f_acc[j] = s2;
        f_e[j] = s3;
    }
    let mut b_exp = vec![zero; n + 1];
    let mut b_acc = vec![zero; n + 1];
    let mut b_e = vec![zero; n + 1];
    for j in (0..n).rev() {
        b_exp[j] = b_exp[j + 1] + y[j] * C64::from_polar(1.0, lambda * z[j]);
        b_acc[j] = if j + 1 < n { b_acc[j + 1] * (-lambda * (z[j + 1] - z[j])).exp() + y[j] } else { y[j] };
        b_e[j] = b_e[j + 1] + y[j] * (-lambda * z[j]).exp();
    }

    let cut = DIRECT_PRODUCT / lambda;
    let first_far = z.partition_point(|&s| s < cut);
    let norm = 8.0 * std::f64::consts::PI * lambda.powi(3);
    targets
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                return (0..n).map(|j| swave_resolvent(C64::new(lambda, 0.0), 0.0, z[j]) * c[j]).sum();
            }
            let mut direct = zero;
            let mut fast = zero;
            let (left_end, right_start) = if t >= cut {
                let l = z.partition_point(|&s| s <= t);
                (l, l)
            } else {
                for j in 0..first_far {
                    direct += swave_resolvent(C64::new(lambda, 0.0), t, z[j]) * c[j];
                }
                (0, first_far)
            };
            if left_end > 0 {
                let i = left_end - 1;
                fast += C64::from_polar(1.0, lambda * t) * f_sin[i]
                    - 0.5 * ((-lambda * (t - z[i])).exp() * f_acc[i] - (-lambda * t).exp() * f_e[i]);
            }
            if right_start < n {
                let j = right_start;
                fast += (lambda * t).sin() * b_exp[j] - 0.5 * ((-lambda * (z[j] - t)).exp() * b_acc[j] - (-lambda * t).exp() * b_e[j]);
            }
            direct + fast / (norm * t)
        })
        .collect()
}

/// Radial potential discretised on a radial grid, with its symmetric system.
pub struct RadialChannel {
    pub grid: RadialGrid,
    pub split: PotentialSplit,
    pub system: SymmetricSystem<ShellNodes>,
}

impl RadialChannel {
    pub fn new(potential: &Potential, grid: RadialGrid) -> Result<Self> {
        potential.validate()?;
        let support = potential.support_radius();
        if grid.radius + 1e-12 < support {
            return Err(Error::GridTooSmall { grid_radius: grid.radius, support_radius: support });
        }
        let values = grid.nodes.iter().map(|&r| potential.radial(r)).collect();
        let split = PotentialSplit::from_samples(*potential, values, grid.weights.clone())?;
        let system = SymmetricSystem::new(ShellNodes(grid.nodes.clone()), &split)?;
        Ok(Self { grid, split, system })
    }

    /// Grid on the support of V with 16-point panels of width at most
    /// 4/λ_max, so that every panel carries a bounded phase.
    pub fn resolving(potential: &Potential, lambda_max: f64) -> Result<Self> {
        let radius = potential.support_radius();
        let width = (4.0 / lambda_max.max(1.0)).min(0.5);
        Self::new(potential, RadialGrid::new(radius, width, 16)?)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn d(&self) -> &[f64] {
        &self.system.d
    }

    pub fn u(&self) -> &[f64] {
        &self.system.u
    }

    /// M̃⁺(λ)x = Ux + D R̄⁺ D x without forming the matrix.
    pub fn apply_m(&self, lambda: f64, x: &[C64]) -> Vec<C64> {
        let d = self.d();
        let dx: Vec<C64> = x.iter().zip(d).map(|(x, d)| x * d).collect();
        let r = swave_apply(lambda, self.nodes(), self.nodes(), &dx);
        r.iter().zip(d).zip(x.iter().zip(self.u())).map(|((r, d), (x, u))| r * d + x * u).collect()
    }

    /// Solves M̃⁺(λ) q = rhs by GMRES; the kernel part is numerically of low
    /// rank, so a handful of iterations suffice. Falls back to LU if GMRES
    /// stalls.
    pub fn solve_m(&self, lambda: f64, rhs: &[C64]) -> Result<Vec<C64>> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
        }
        match gmres(|v| self.apply_m(lambda, v), rhs, 1e-13, self.len().min(200)) {
            Ok((x, _)) => Ok(x),
            Err(Error::SolverNotConverged { .. }) => {
                let m = self.system.m_sym(C64::new(lambda, 0.0));
                let b = crate::linalg::CVec::from_column_slice(rhs);
                let x = m.lu().solve(&b).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
                Ok(x.iter().copied().collect())
            }
            Err(e) => Err(e),
        }
    }

    /// F(λ) = Σ sin(λz)c/z and Ĝ(λ) = Σ c(e^{−λ(R−z)} − e^{−λ(R+z)})/(2z), R the
    /// grid radius. For r ≥ R,
    /// Σ R̄⁺(r, z_i)c_i = [e^{iλr}F − e^{−λ(r−R)}Ĝ] / (8πλ³r).
    pub fn far_field(&self, lambda: f64, coeffs: &[C64]) -> (C64, C64) {
        let big_r = self.grid.radius;
        let mut f = C64::new(0.0, 0.0);
        let mut g = C64::new(0.0, 0.0);
        for (z, c) in self.nodes().iter().zip(coeffs) {
            f += c * ((lambda * z).sin() / z);
            g += c * (((-lambda * (big_r - z)).exp() - (-lambda * (big_r + z)).exp()) / (2.0 * z));
        }
        (f, g)
    }

    /// Evaluates Σ R̄⁺(r, z_i)c_i at r ≥ R from the far-field pair.
    pub fn far_profile(&self, lambda: f64, (f, g): (C64, C64), r: f64) -> C64 {
        let e = C64::from_polar(1.0, lambda * r) * f - g * (-lambda * (r - self.grid.radius)).exp();
        e / (8.0 * std::f64::consts::PI * lambda.powi(3) * r)
    }

    /// Tabulates [F, Ĝ, Σ R̄⁺(r, z_i)c_i for r in `inner`] for the coefficient
    /// vectors c(λ) on panels resolving only the potential scale.
    pub fn profile_table(
        &self,
        panels: LambdaPanels,
        inner: &[f64],
        coeffs: impl Fn(f64) -> Result<Vec<C64>> + Sync,
    ) -> Result<PanelTable> {
        PanelTable::build(panels, |l| {
            let c = coeffs(l)?;
            let (f, g) = self.far_field(l, &c);
            let mut v = vec![f, g];
            if !inner.is_empty() {
                v.extend(swave_apply(l, inner, self.nodes(), &c));
            }
            Ok(v)
        })
    }

    /// s_j = d_j sin(λz_j)/z_j; the jump kernel factors as
    /// D(R̄⁺ − R̄⁻)(·, r) = i sin(λr)/(4πλ³r) · s.
    pub fn jump_source(&self, lambda: f64) -> Vec<f64> {
        self.nodes().iter().zip(self.d()).map(|(z, d)| d * (lambda * z).sin() / z).collect()
    }

    /// Dense kernel of R̄_V^±(λ⁴) on the grid nodes.
    pub fn perturbed_resolvent(&self, lambda: f64, sign: Sign) -> Result<KernelMatrix> {
        perturbed_resolvent_on(&self.system, lambda, sign, Route::Symmetric)
    }

    /// ‖⟨r⟩^{−σ} R_V⁺(λ⁴) ⟨r⟩^{−σ}‖ on radial L²(ℝ³) functions supported in
    /// the grid ball.
    pub fn weighted_resolvent_norm(&self, lambda: f64, sigma: f64) -> Result<f64> {
        let k = self.perturbed_resolvent(lambda, Sign::Plus)?;
        let sw: Vec<f64> = self.grid.nodes.iter().zip(&self.grid.weights).map(|(r, w)| w.sqrt() * bracket(*r).powf(-sigma)).collect();
        let n = self.len();
        let a: CMat = DMatrix::from_fn(n, n, |i, j| k.values[(i, j)] * (sw[i] * sw[j]));
        Ok(a.singular_values().max())
    }

    /// Same norm for the free resolvent, as a reference.
    pub fn free_weighted_norm(&self, lambda: f64, sigma: f64) -> f64 {
        let sw: Vec<f64> = self.grid.nodes.iter().zip(&self.grid.weights).map(|(r, w)| w.sqrt() * bracket(*r).powf(-sigma)).collect();
        let n = self.len();
        let mu = C64::new(lambda, 0.0);
        let a: CMat = DMatrix::from_fn(n, n, |i, j| swave_resolvent(mu, self.grid.nodes[i], self.grid.nodes[j]) * (sw[i] * sw[j]));
        a.singular_values().max()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LapReport {
    pub sigma: f64,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub free_norms: Vec<f64>,
    pub slope: f64,
    pub free_slope: f64,
}

/// Weighted resolvent norms over a λ-ladder with their log-log slopes.
pub fn lap_decay(channel: &RadialChannel, lambdas: &[f64], sigma: f64) -> Result<LapReport> {
    let norms: Vec<f64> = lambdas.iter().map(|&l| channel.weighted_resolvent_norm(l, sigma)).collect::<Result<_>>()?;
    let free_norms: Vec<f64> = lambdas.iter().map(|&l| channel.free_weighted_norm(l, sigma)).collect();
    Ok(LapReport {
        sigma,
        lambdas: lambdas.to_vec(),
        slope: crate::fit::loglog_fit(lambdas, &norms).slope,
        free_slope: crate::fit::loglog_fit(lambdas, &free_norms).slope,
        norms,
        free_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_apply_matches_dense_sum() {
        let g = RadialGrid::new(6.0, 0.5, 8).unwrap();
        let coeffs: Vec<C64> = g.nodes.iter().map(|r| C64::new((-r * r / 4.0).exp(), 0.3 * r.sin())).collect();
        let targets = [0.0, 1e-3, 0.3, 2.2, 5.9, 7.5, 30.0];
        for &l in &[0.1, 0.7, 3.0, 25.0] {
            let fast = swave_apply(l, &targets, &g.nodes, &coeffs);
            for (t, f) in targets.iter().zip(&fast) {
                let dense: C64 = g.nodes.iter().zip(&coeffs).map(|(z, c)| swave_resolvent(C64::new(l, 0.0), *t, *z) * c).sum();
                assert!((f - dense).norm() <= 1e-11 * dense.norm().max(1e-300), "λ={l} t={t}: {f} vs {dense}");
            }
        }
    }

    #[test]
    fn iterative_and_dense_solves_agree() {
        let ch = RadialChannel::new(&Potential::gaussian_well(0.5), RadialGrid::new(6.0, 0.5, 12).unwrap()).unwrap();
        let rhs: Vec<C64> = ch.jump_source(3.0).iter().map(|&s| C64::new(s, 0.0)).collect();
        let q = ch.solve_m(3.0, &rhs).unwrap();
        let m = ch.system.m_sym(C64::new(3.0, 0.0));
        let dense = m.lu().solve(&crate::linalg::CVec::from_column_slice(&rhs)).unwrap();
        let err: f64 = q.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / dense.norm() < 1e-10);
    }

    #[test]
    fn small_lambda_solve_matches_dense() {
        let ch = RadialChannel::new(&Potential::gaussian_well(0.5), RadialGrid::new(6.0, 0.5, 12).unwrap()).unwrap();
        for l in [0.05, 0.12] {
            let rhs: Vec<C64> = ch.jump_source(l).iter().map(|&s| C64::new(s, 0.0)).collect();
            let q = ch.solve_m(l, &rhs).unwrap();
            let dense = ch.system.m_sym(C64::new(l, 0.0)).lu().solve(&crate::linalg::CVec::from_column_slice(&rhs)).unwrap();
            let err: f64 = q.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(err / dense.norm() < 1e-10, "{l}");
        }
    }

    #[test]
    fn far_field_matches_semiseparable_product() {
        let ch = RadialChannel::new(&Potential::gaussian_well(0.5), RadialGrid::new(6.0, 0.5, 12).unwrap()).unwrap();
        let c: Vec<C64> = ch.nodes().iter().map(|z| C64::new((-z).exp(), z.cos())).collect();
        for l in [0.1, 1.3, 17.0] {
            let targets = [6.0, 9.5, 140.0];
            let direct = swave_apply(l, &targets, ch.nodes(), &c);
            let ff = ch.far_field(l, &c);
            for (t, d) in targets.iter().zip(&direct) {
                let v = ch.far_profile(l, ff, *t);
                assert!((v - d).norm() < 1e-10 * d.norm(), "{l} {t}");
            }
        }
    }

    #[test]
    fn weighted_norm_decays_like_inverse_cube() {
        let ch = RadialChannel::new(&Potential::gaussian_well(0.5), RadialGrid::new(20.0, 0.5, 12).unwrap()).unwrap();
        let rep = lap_decay(&ch, &[2.0, 3.0, 4.5, 6.0, 8.0], 0.51).unwrap();
        assert!(rep.slope <= -2.7, "{rep:?}");
        assert!((rep.free_slope + 3.0).abs() < 0.3, "{rep:?}");
    }
}
