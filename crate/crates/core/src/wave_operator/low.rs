//! Low-energy kernels of the wave operator on a ball grid:
//! ∫ λ³χ(λ) R⁺ v Γ(λ) v (R⁺ − R⁻)(λ⁴)(x, y) dλ with Γ = QD₀Q (term Q),
//! λM₁ (term M1) and M₂(λ) = M⁻¹ − QD₀Q − λM₁ (term err).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cutoff::SpectralCutoff;
use crate::error::{Error, Result};
use crate::free_resolvent::{difference_radial, resolvent_radial};
use crate::geometry::{BallGrid, LambdaPanels, Point3};
use crate::linalg::{CMat, CVec};
use crate::m_matrix::{MExpansion, PointNodes, SymmetricSystem};
use crate::potentials::PotentialSplit;
use crate::{Sign, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowTerm {
    Q,
    M1,
    Err,
    /// QD₀Q + P in place of QD₀Q: P does not annihilate v.
    NegativeControl,
}

impl LowTerm {
    pub fn label(&self) -> &'static str {
        match self {
            LowTerm::Q => "Q",
            LowTerm::M1 => "M1",
            LowTerm::Err => "err",
            LowTerm::NegativeControl => "negctl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    /// Change under halving every λ-panel.
    pub quad_err: f64,
}

/// Evaluator bound to one expansion and cut-off.
pub struct LowEnergyKernels<'a> {
    exp: &'a MExpansion,
    sys: SymmetricSystem<PointNodes>,
    cutoff: SpectralCutoff,
    negative: CMat,
    support: f64,
    tolerance: f64,
}

impl<'a> LowEnergyKernels<'a> {
    pub fn new(split: &PotentialSplit, grid: &BallGrid, exp: &'a MExpansion, cutoff: SpectralCutoff) -> Result<Self> {
        let sys = SymmetricSystem::ball(split, grid)?;
        if exp.qd0q.nrows() != sys.len() {
            return Err(Error::InvalidInput("expansion and grid sizes differ".into()));
        }
        let e = sys.e_vec();
        let n = sys.len();
        let negative = &exp.qd0q + CMat::from_fn(n, n, |i, j| C64::new(e[i] * e[j], 0.0));
        let support = grid.nodes.iter().map(|p| p.norm()).fold(0.0, f64::max);
        Ok(Self { exp, sys, cutoff, negative, support, tolerance: 1e-6 })
    }

    /// Relative refinement change above which evaluation fails.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn panels(&self, pairs: &[(Point3, Point3)]) -> LambdaPanels {
        let scale = pairs.iter().map(|(x, y)| x.norm() + y.norm()).fold(0.0, f64::max) + 2.0 * self.support;
        self.cutoff.low_panels(scale, 16)
    }

    fn a_vec(&self, lambda: f64, x: Point3) -> CVec {
        CVec::from_iterator(
            self.sys.len(),
            self.sys.nodes.0.iter().zip(&self.sys.d).map(|(z, d)| resolvent_radial(lambda, x.dist(z), Sign::Plus) * *d),
        )
    }

    fn b_vec(&self, lambda: f64, y: Point3) -> CVec {
        CVec::from_iterator(
            self.sys.len(),
            self.sys.nodes.0.iter().zip(&self.sys.d).map(|(z, d)| difference_radial(lambda, z.dist(&y)) * *d),
        )
    }

    /// Γ(λ)b for every requested term.
    fn middle(
        &self,
        lambda: f64,
        b: &CVec,
        terms: &[LowTerm],
        lu: Option<&nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    ) -> Result<Vec<CVec>> {
        let qb = &self.exp.qd0q * b;
        let need_m1 = terms.iter().any(|t| matches!(t, LowTerm::M1 | LowTerm::Err));
        let m1b = if need_m1 { Some(&self.exp.m1 * b * C64::new(lambda, 0.0)) } else { None };
        terms
            .iter()
            .map(|t| {
                Ok(match t {
                    LowTerm::Q => qb.clone(),
                    LowTerm::M1 => m1b.clone().unwrap(),
                    LowTerm::NegativeControl => &self.negative * b,
                    LowTerm::Err => {
                        let full = lu.unwrap().solve(b).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
                        full - &qb - m1b.as_ref().unwrap()
                    }
                })
            })
            .collect()
    }

    /// λ-integrand of each term at one (x, y), without quadrature weight.
    pub fn integrand(&self, lambda: f64, x: Point3, y: Point3, terms: &[LowTerm]) -> Result<Vec<C64>> {
        let lu = if terms.contains(&LowTerm::Err) { Some(self.sys.m_sym(C64::new(lambda, 0.0)).lu()) } else { None };
        let a = self.a_vec(lambda, x);
        let b = self.b_vec(lambda, y);
        let mids = self.middle(lambda, &b, terms, lu.as_ref())?;
        let w = lambda.powi(3) * self.cutoff.chi(lambda);
        Ok(mids.iter().map(|m| a.dot(m) * w).collect())
    }

    fn integrate(&self, panels: &LambdaPanels, pairs: &[(Point3, Point3)], terms: &[LowTerm]) -> Result<Vec<Vec<C64>>> {
        let mut xs: Vec<Point3> = Vec::new();
        let mut ys: Vec<Point3> = Vec::new();
        let index = |v: &mut Vec<Point3>, p: Point3| -> usize {
            match v.iter().position(|q| *q == p) {
                Some(i) => i,
                None => {
                    v.push(p);
                    v.len() - 1
                }
            }
        };
        let idx: Vec<(usize, usize)> = pairs.iter().map(|(x, y)| (index(&mut xs, *x), index(&mut ys, *y))).collect();
        let mut acc = vec![vec![C64::new(0.0, 0.0); terms.len()]; pairs.len()];
        let need_lu = terms.contains(&LowTerm::Err);
        for (&l, &w) in panels.nodes.iter().zip(&panels.weights) {
            let chi = self.cutoff.chi(l);
            if chi == 0.0 {
                continue;
            }
            let lu = if need_lu { Some(self.sys.m_sym(C64::new(l, 0.0)).lu()) } else { None };
            let a: Vec<CVec> = xs.iter().map(|x| self.a_vec(l, *x)).collect();
            let mids: Vec<Vec<CVec>> = ys.iter().map(|y| self.middle(l, &self.b_vec(l, *y), terms, lu.as_ref())).collect::<Result<_>>()?;
            let scale = w * l.powi(3) * chi;
            for (k, &(i, j)) in idx.iter().enumerate() {
                for (t, m) in mids[j].iter().enumerate() {
                    acc[k][t] += a[i].dot(m) * scale;
                }
            }
        }
        Ok(acc)
    }

    /// Kernel values for every pair and term, checked by panel refinement.
    pub fn evaluate(&self, pairs: &[(Point3, Point3)], terms: &[LowTerm]) -> Result<Vec<Vec<KernelValue>>> {
        let p = self.panels(pairs);
        let coarse = self.integrate(&p, pairs, terms)?;
        let fine = self.integrate(&p.refined(), pairs, terms)?;
        let mut out = Vec::with_capacity(pairs.len());
        for (c, f) in coarse.iter().zip(&fine) {
            let mut row = Vec::with_capacity(terms.len());
            for (cv, fv) in c.iter().zip(f) {
                let err = (fv - cv).norm();
                if err > self.tolerance * fv.norm() && err > 1e-300 {
                    return Err(Error::QuadratureNotConverged { change: err / fv.norm() });
                }
                row.push(KernelValue { value: *fv, quad_err: err });
            }
            out.push(row);
        }
        Ok(out)
    }

    /// M1 term through Σ_{z,w} d_z M₁ d_w A_{z,w}(x, y)/(64π²), with A_{z,w}
    /// evaluated in closed form.
    pub fn m1_via_a00(&self, x: Point3, y: Point3) -> C64 {
        let nodes = &self.sys.nodes.0;
        let d = &self.sys.d;
        let scale = x.norm() + y.norm() + 2.0 * self.support;
        let ev = super::a00::A00Evaluator::new(self.cutoff, scale);
        let ax: Vec<f64> = nodes.iter().map(|z| x.dist(z)).collect();
        let by: Vec<f64> = nodes.iter().map(|w| y.dist(w)).collect();
        let mut total = C64::new(0.0, 0.0);
        for (i, a) in ax.iter().enumerate() {
            let mut row = C64::new(0.0, 0.0);
            for (j, b) in by.iter().enumerate() {
                row += self.exp.m1[(i, j)] * d[j] * ev.value(*a, *b);
            }
            total += row * d[i];
        }
        total / (64.0 * PI * PI)
    }
}
