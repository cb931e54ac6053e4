//! The symmetric resolvent system M(λ) = U + vR₀⁺(λ⁴)v, its threshold
//! expansion M⁻¹ = QD₀Q + λM₁ + M₂(λ), and the perturbed resolvent.
//!
//! All matrices are held internally in symmetric form: with d_j = v_j ω_j^{1/2},
//! M̃ = U + diag(d) R diag(d). The operator (Nyström) form of the same matrix is
//! W^{−1/2} M̃ W^{1/2}, and Hilbert–Schmidt norms of operators are Frobenius
//! norms of symmetric forms.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::free_resolvent::{a1_plus, a_plus, resolvent_complex, swave_resolvent};
use crate::geometry::{BallGrid, Point3};
use crate::linalg::{extrapolate_to_zero, frobenius, householder_for, inverse_with_condition, spectral_norm, to_complex, CMat, RMat};
use crate::potentials::PotentialSplit;
use crate::{Sign, C64};

/// Nyström discretisation of the free resolvent on a node set.
pub trait Nystrom: Sync {
    fn len(&self) -> usize;
    /// R(μ⁴)(z_i, z_j), Im μ ≥ 0.
    fn free_kernel(&self, mu: C64, i: usize, j: usize) -> C64;
    /// G₀(z_i, z_j).
    fn g0(&self, i: usize, j: usize) -> f64;
    /// G₁(z_i, z_j).
    fn g1(&self, i: usize, j: usize) -> f64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Point nodes of a ball grid.
#[derive(Debug, Clone)]
pub struct PointNodes(pub Vec<Point3>);

impl Nystrom for PointNodes {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn free_kernel(&self, mu: C64, i: usize, j: usize) -> C64 {
        resolvent_complex(mu, self.0[i].dist(&self.0[j]))
    }
    fn g0(&self, i: usize, j: usize) -> f64 {
        -self.0[i].dist(&self.0[j]) / (8.0 * PI)
    }
    fn g1(&self, i: usize, j: usize) -> f64 {
        let d = self.0[i] - self.0[j];
        d.dot(&d)
    }
}

/// Radial nodes carrying the spherically averaged (s-wave) kernels.
#[derive(Debug, Clone)]
pub struct ShellNodes(pub Vec<f64>);

impl Nystrom for ShellNodes {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn free_kernel(&self, mu: C64, i: usize, j: usize) -> C64 {
        swave_resolvent(mu, self.0[i], self.0[j])
    }
    fn g0(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.0[i].min(self.0[j]), self.0[i].max(self.0[j]));
        if b == 0.0 {
            0.0
        } else {
            -(b * b + a * a / 3.0) / (8.0 * PI * b)
        }
    }
    fn g1(&self, i: usize, j: usize) -> f64 {
        self.0[i] * self.0[i] + self.0[j] * self.0[j]
    }
}

/// How a `KernelMatrix` acts on nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixForm {
    /// Raw kernel values K(z_i, z_j); the operator is K·diag(ω).
    Kernel,
    /// Operator on nodal values, weights applied.
    Operator,
    /// W^{1/2}·(operator)·W^{−1/2}.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: CMat,
    pub weights: Vec<f64>,
    pub form: MatrixForm,
}

impl KernelMatrix {
    pub fn weights_applied(&self) -> bool {
        self.form != MatrixForm::Kernel
    }

    /// Symmetric form W^{1/2} A W^{−1/2} of the operator.
    pub fn to_symmetric(&self) -> CMat {
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        match self.form {
            MatrixForm::Symmetric => self.values.clone(),
            MatrixForm::Operator => CMat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| self.values[(i, j)] * (sw[i] / sw[j])),
            MatrixForm::Kernel => CMat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| self.values[(i, j)] * (sw[i] * sw[j])),
        }
    }

    pub fn to_operator(&self) -> CMat {
        match self.form {
            MatrixForm::Operator => self.values.clone(),
            MatrixForm::Kernel => CMat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| self.values[(i, j)] * self.weights[j]),
            MatrixForm::Symmetric => {
                let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
                CMat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| self.values[(i, j)] * (sw[j] / sw[i]))
            }
        }
    }

    /// Apply the operator to nodal values.
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let op = self.to_operator();
        let x = crate::linalg::CVec::from_column_slice(f);
        (op * x).iter().copied().collect()
    }

    /// Hilbert–Schmidt norm of the operator.
    pub fn hs_norm(&self) -> f64 {
        frobenius(&self.to_symmetric())
    }

    fn symmetric(values: CMat, weights: Vec<f64>) -> Self {
        Self { values, weights, form: MatrixForm::Symmetric }
    }
}

/// U, d = v ω^{1/2} and the node set of one discretisation.
pub struct SymmetricSystem<D: Nystrom> {
    pub nodes: D,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub v_l1: f64,
}

impl SymmetricSystem<PointNodes> {
    pub fn ball(split: &PotentialSplit, grid: &BallGrid) -> Result<Self> {
        SymmetricSystem::new(PointNodes(grid.nodes.clone()), split)
    }
}

impl<D: Nystrom> SymmetricSystem<D> {
    pub fn new(nodes: D, split: &PotentialSplit) -> Result<Self> {
        if nodes.len() != split.len() {
            return Err(Error::InvalidInput("potential split does not match the node set".into()));
        }
        Ok(Self {
            nodes,
            u: split.u.clone(),
            d: split.v_tilde(),
            weights: split.weights.clone(),
            values: split.values.clone(),
            v_l1: split.v_l1,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Free resolvent kernel matrix R(μ⁴)(z_i, z_j).
    pub fn free_matrix(&self, mu: C64) -> CMat {
        let n = self.len();
        let cols: Vec<Vec<C64>> = (0..n).into_par_iter().map(|j| (0..n).map(|i| self.nodes.free_kernel(mu, i, j)).collect()).collect();
        CMat::from_fn(n, n, |i, j| cols[j][i])
    }

    /// M̃(μ) = U + D R(μ⁴) D.
    pub fn m_sym(&self, mu: C64) -> CMat {
        let mut m = self.free_matrix(mu);
        let n = self.len();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] *= self.d[i] * self.d[j];
            }
            m[(j, j)] += self.u[j];
        }
        m
    }

    /// T̃ = U + D G₀ D.
    pub fn t_sym(&self) -> RMat {
        let n = self.len();
        RMat::from_fn(n, n, |i, j| {
            let g = self.d[i] * self.nodes.g0(i, j) * self.d[j];
            if i == j {
                g + self.u[i]
            } else {
                g
            }
        })
    }

    /// D G₁ D.
    pub fn g1_sym(&self) -> RMat {
        let n = self.len();
        RMat::from_fn(n, n, |i, j| self.d[i] * self.nodes.g1(i, j) * self.d[j])
    }

    /// Unit vector e = ṽ/‖ṽ‖ spanning ran P.
    pub fn e_vec(&self) -> Vec<f64> {
        let n = self.v_l1.sqrt();
        self.d.iter().map(|x| x / n).collect()
    }

    pub fn projection_p(&self) -> RMat {
        let e = self.e_vec();
        RMat::from_fn(self.len(), self.len(), |i, j| e[i] * e[j])
    }

    pub fn projection_q(&self) -> RMat {
        RMat::identity(self.len(), self.len()) - self.projection_p()
    }

    /// Restriction of T to ran Q in a Householder basis, its inverse lifted
    /// back as QD₀Q, and the extreme eigenvalue data used for regularity.
    pub fn feshbach(&self) -> Result<Feshbach> {
        let n = self.len();
        if n < 2 {
            return Err(Error::InvalidInput("need at least two nodes".into()));
        }
        let t = self.t_sym();
        let h = householder_for(&self.d);
        let bt = h.transpose() * &t * &h;
        let sub = bt.view((1, 1), (n - 1, n - 1)).into_owned();
        let eig = SymmetricEigen::new(sub.clone());
        let sigma_min = eig.eigenvalues.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        let t_norm = SymmetricEigen::new(t.clone()).eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let tolerance = 1e-6 * t_norm;
        if !(sigma_min > tolerance) {
            return Err(Error::NotRegular { sigma_min, tolerance });
        }
        let mut inv_diag = eig.eigenvalues.clone();
        inv_diag.iter_mut().for_each(|x| *x = 1.0 / *x);
        let d0 = &eig.eigenvectors * RMat::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
        let mut lifted = RMat::zeros(n, n);
        lifted.view_mut((1, 1), (n - 1, n - 1)).copy_from(&d0);
        let qd0q = &h * lifted * h.transpose();
        let e = nalgebra::DVector::from_vec(self.e_vec());
        let te = &t * &e;
        let f = &e - &qd0q * &te;
        let c = e.dot(&te) - te.dot(&(&qd0q * &te));
        let s = &f * f.transpose();
        Ok(Feshbach { t, qd0q, s, c, sigma_min, tolerance, t_norm, v_l1: self.v_l1 })
    }

    /// Inverse of M̃(λ) at real λ > 0 with its condition number.
    pub fn m_inverse(&self, lambda: f64) -> Result<(CMat, f64)> {
        inverse_with_condition(&self.m_sym(C64::new(lambda, 0.0)))
    }
}

/// Data of the Feshbach decomposition of A⁺(λ) = (a⁺‖V‖₁/λ)P + T.
#[derive(Debug, Clone)]
pub struct Feshbach {
    pub t: RMat,
    pub qd0q: RMat,
    /// Rank-one matrix (e − QD₀QTe)(e − QD₀QTe)ᵀ.
    pub s: RMat,
    /// c = eᵀTe − eᵀTQD₀QTe, so that g⁺(λ) = (a⁺‖V‖₁/λ + c)⁻¹.
    pub c: f64,
    pub sigma_min: f64,
    pub tolerance: f64,
    pub t_norm: f64,
    pub v_l1: f64,
}

impl Feshbach {
    pub fn g_plus(&self, lambda: f64) -> C64 {
        C64::new(1.0, 0.0) / (a_plus() * (self.v_l1 / lambda) + self.c)
    }

    /// A⁺(λ)⁻¹ = QD₀Q + g⁺(λ) S.
    pub fn a_inverse(&self, lambda: f64) -> CMat {
        to_complex(&self.qd0q) + to_complex(&self.s) * self.g_plus(lambda)
    }

    pub fn a_matrix(&self, lambda: f64, p: &RMat) -> CMat {
        to_complex(&self.t) + to_complex(p) * (a_plus() * (self.v_l1 / lambda))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Regularity {
    Regular { sigma_min: f64, tolerance: f64 },
    NotRegular { sigma_min: f64, tolerance: f64 },
}

impl Regularity {
    pub fn sigma_min(&self) -> f64 {
        match *self {
            Regularity::Regular { sigma_min, .. } | Regularity::NotRegular { sigma_min, .. } => sigma_min,
        }
    }

    pub fn is_regular(&self) -> bool {
        matches!(self, Regularity::Regular { .. })
    }
}

/// Smallest singular value of QTQ on ran Q against the tolerance 1e−6‖T‖.
pub fn detect_regularity(split: &PotentialSplit, grid: &BallGrid) -> Result<Regularity> {
    regularity_of(&SymmetricSystem::ball(split, grid)?)
}

pub fn regularity_of<D: Nystrom>(sys: &SymmetricSystem<D>) -> Result<Regularity> {
    match sys.feshbach() {
        Ok(f) => Ok(Regularity::Regular { sigma_min: f.sigma_min, tolerance: f.tolerance }),
        Err(Error::NotRegular { sigma_min, tolerance }) => Ok(Regularity::NotRegular { sigma_min, tolerance }),
        Err(e) => Err(e),
    }
}

/// M⁺(λ) in operator form on the grid nodes.
pub fn assemble_m(lambda: f64, split: &PotentialSplit, grid: &BallGrid) -> Result<KernelMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    let sys = SymmetricSystem::ball(split, grid)?;
    let m = sys.m_sym(C64::new(lambda, 0.0));
    let km = KernelMatrix::symmetric(m, grid.weights.clone());
    Ok(KernelMatrix { values: km.to_operator(), weights: km.weights, form: MatrixForm::Operator })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda0Policy {
    Auto(AutoTag),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for Lambda0Policy {
    fn default() -> Self {
        Lambda0Policy::Auto(AutoTag::Auto)
    }
}

/// Compact summary written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub lambda0: f64,
    pub c_const: f64,
    pub m2_slope: f64,
    pub sigma_min: f64,
    pub condition_numbers: Vec<f64>,
}

/// Diagnostics beyond the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionDiagnostics {
    pub ladder: Vec<f64>,
    pub m2_norms: Vec<f64>,
    pub dm2_norms: Vec<f64>,
    pub dm2_slope: f64,
    /// Analytic c = eᵀTe − eᵀTQD₀QTe.
    pub c_analytic: f64,
    /// max_k |c_k − c| over the ladder fits, including imaginary parts.
    pub c_spread: f64,
    /// Relative spread of S recovered at two different λ.
    pub s_variation: f64,
    /// Relative gap between numerical S and the analytic rank-one S.
    pub s_analytic_gap: f64,
    /// Relative gap between extrapolated M⁻¹(0) and QD₀Q.
    pub qd0q_gap: f64,
    /// Relative gap between extrapolated M₁ and its closed form.
    pub m1_analytic_gap: f64,
    pub feshbach_residual: f64,
}

/// Threshold expansion of M⁺(λ)⁻¹, symmetric forms.
#[derive(Debug, Clone)]
pub struct MExpansion {
    pub lambda0: f64,
    pub qd0q: CMat,
    pub m1: CMat,
    pub s: CMat,
    pub c_const: f64,
    pub v_l1: f64,
    pub weights: Vec<f64>,
    pub report: ExpansionReport,
    pub diagnostics: ExpansionDiagnostics,
}

impl MExpansion {
    pub fn g_plus(&self, lambda: f64) -> C64 {
        C64::new(1.0, 0.0) / (a_plus() * (self.v_l1 / lambda) + self.c_const)
    }

    pub fn qd0q_matrix(&self) -> KernelMatrix {
        KernelMatrix::symmetric(self.qd0q.clone(), self.weights.clone())
    }

    pub fn m1_matrix(&self) -> KernelMatrix {
        KernelMatrix::symmetric(self.m1.clone(), self.weights.clone())
    }

    pub fn s_matrix(&self) -> KernelMatrix {
        KernelMatrix::symmetric(self.s.clone(), self.weights.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    pub lambda0: Lambda0Policy,
    /// Number of smallest ladder values used to extrapolate M₁.
    pub extrapolation_points: usize,
    /// Relative step for the λ-derivative of M₂.
    pub derivative_step: f64,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self { lambda0: Lambda0Policy::default(), extrapolation_points: 4, derivative_step: 1e-3 }
    }
}

/// Largest λ ≤ 0.1 with ‖(M(λ) − A(λ))A(λ)⁻¹‖ < 1/2, by bisection.
pub fn choose_lambda0<D: Nystrom>(sys: &SymmetricSystem<D>, fes: &Feshbach) -> f64 {
    let ok = |l: f64| -> bool {
        let m = sys.m_sym(C64::new(l, 0.0));
        let p = sys.projection_p();
        let a = fes.a_matrix(l, &p);
        let r = (m - a) * fes.a_inverse(l);
        spectral_norm(&r, 60) < 0.5
    };
    let hi = 0.1;
    if ok(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (1e-4, hi);
    for _ in 0..20 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Threshold expansion of M⁺(λ)⁻¹ from a ladder of small λ.
pub fn expand_m_inverse(split: &PotentialSplit, grid: &BallGrid, ladder: &[f64], opts: ExpansionOptions) -> Result<MExpansion> {
    let sys = SymmetricSystem::ball(split, grid)?;
    expand_system(&sys, ladder, opts)
}

pub fn expand_system<D: Nystrom>(sys: &SymmetricSystem<D>, ladder: &[f64], opts: ExpansionOptions) -> Result<MExpansion> {
    if ladder.len() < 6 {
        return Err(Error::InvalidInput("the λ-ladder needs at least six values".into()));
    }
    if ladder.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidInput("ladder values must be positive".into()));
    }
    let mut lad = ladder.to_vec();
    lad.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lad.dedup();
    if lad.len() < 6 || lad[lad.len() - 1] / lad[0] < 10.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidInput("the λ-ladder must span at least a decade".into()));
    }
    let fes = sys.feshbach()?;
    let lambda0 = match opts.lambda0 {
        Lambda0Policy::Fixed(l) => l,
        Lambda0Policy::Auto(_) => choose_lambda0(sys, &fes),
    };
    let max_l = *lad.last().unwrap();
    if max_l > lambda0 * (1.0 + 1e-12) {
        return Err(Error::LadderOutsideValidity { max_lambda: max_l, lambda0 });
    }

    let qd0q = to_complex(&fes.qd0q);
    let delta = opts.derivative_step;
    let mut inverses = Vec::with_capacity(lad.len());
    let mut derivs = Vec::with_capacity(lad.len());
    let mut conds = Vec::with_capacity(lad.len());
    for &l in &lad {
        let (inv, cond) = sys.m_inverse(l)?;
        let (ip, _) = sys.m_inverse(l * (1.0 + delta))?;
        let (im, _) = sys.m_inverse(l * (1.0 - delta))?;
        derivs.push((ip - im) / C64::new(2.0 * l * delta, 0.0));
        inverses.push(inv);
        conds.push(cond);
    }

    let k = opts.extrapolation_points.clamp(2, lad.len());
    let a0 = extrapolate_to_zero(&lad[..k], &inverses[..k]);
    let qd0q_gap = frobenius(&(&a0 - &qd0q)) / frobenius(&qd0q);
    let quotients: Vec<CMat> = (0..k).map(|i| (&inverses[i] - &qd0q) / C64::new(lad[i], 0.0)).collect();
    let m1 = extrapolate_to_zero(&lad[..k], &quotients);

    // M₁ = S/(a⁺‖V‖₁) − a₁⁺ QD₀Q (DG₁D) QD₀Q
    let m1_closed = to_complex(&fes.s) / (a_plus() * fes.v_l1) - &qd0q * to_complex(&sys.g1_sym()) * &qd0q * a1_plus();
    let m1_analytic_gap = frobenius(&(&m1 - &m1_closed)) / frobenius(&m1_closed);

    let m2_norms: Vec<f64> = lad.iter().zip(&inverses).map(|(l, inv)| frobenius(&(inv - &qd0q - &m1 * C64::new(*l, 0.0)))).collect();
    let dm2_norms: Vec<f64> = derivs.iter().map(|d| frobenius(&(d - &m1))).collect();
    let m2_slope = loglog_fit(&lad, &m2_norms).slope;
    let dm2_slope = loglog_fit(&lad, &dm2_norms).slope;

    // g⁺ and c from ⟨e, A⁻¹ e⟩ along the ladder
    let p = sys.projection_p();
    let e = crate::linalg::CVec::from_iterator(sys.len(), sys.e_vec().into_iter().map(|x| C64::new(x, 0.0)));
    let mut cs = Vec::with_capacity(lad.len());
    let mut a_invs = Vec::new();
    let ref_idx = [lad.len() / 2, lad.len() - 1];
    for (i, &l) in lad.iter().enumerate() {
        let a = fes.a_matrix(l, &p);
        if ref_idx.contains(&i) {
            let (ainv, _) = inverse_with_condition(&a)?;
            let g = e.dot(&(&ainv * &e));
            cs.push(C64::new(1.0, 0.0) / g - a_plus() * (fes.v_l1 / l));
            a_invs.push((l, ainv, g));
        } else {
            let x = a.lu().solve(&e).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
            let g = e.dot(&x);
            cs.push(C64::new(1.0, 0.0) / g - a_plus() * (fes.v_l1 / l));
        }
    }
    let c_const = cs.iter().map(|c| c.re).sum::<f64>() / cs.len() as f64;
    let c_spread = cs.iter().map(|c| (c - c_const).norm()).fold(0.0, f64::max);
    let s_num: Vec<CMat> = a_invs.iter().map(|(_, ainv, g)| (ainv - &qd0q) / *g).collect();
    let s_variation = frobenius(&(&s_num[0] - &s_num[1])) / frobenius(&s_num[0]);
    let s_analytic_gap = frobenius(&(&s_num[0] - to_complex(&fes.s))) / frobenius(&s_num[0]);
    let s = s_num[0].clone();

    let (lr, ainv_ref, _) = &a_invs[0];
    let a_ref = fes.a_matrix(*lr, &p);
    let rebuilt = &qd0q + &s / (a_plus() * (fes.v_l1 / lr) + c_const);
    let n = sys.len();
    let feshbach_residual = frobenius(&(&a_ref * &rebuilt - CMat::identity(n, n)));
    let _ = ainv_ref;

    Ok(MExpansion {
        lambda0,
        qd0q,
        m1,
        s,
        c_const,
        v_l1: fes.v_l1,
        weights: sys.weights.clone(),
        report: ExpansionReport { lambda0, c_const, m2_slope, sigma_min: fes.sigma_min, condition_numbers: conds },
        diagnostics: ExpansionDiagnostics {
            ladder: lad,
            m2_norms,
            dm2_norms,
            dm2_slope,
            c_analytic: fes.c,
            c_spread,
            s_variation,
            s_analytic_gap,
            qd0q_gap,
            m1_analytic_gap,
            feshbach_residual,
        },
    })
}

/// A⁺(λ)⁻¹ = QD₀Q + g⁺(λ) S from an expansion, symmetric form.
pub fn feshbach_inverse(lambda: f64, exp: &MExpansion) -> KernelMatrix {
    KernelMatrix::symmetric(&exp.qd0q + &exp.s * exp.g_plus(lambda), exp.weights.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// R − R v M⁻¹ v R.
    Symmetric,
    /// (I + R V)⁻¹ R at λ(1 ± iε), extrapolated to ε = 0.
    Direct,
}

/// Kernel of R_V^±(λ⁴) on the grid nodes.
pub fn perturbed_resolvent(lambda: f64, sign: Sign, split: &PotentialSplit, grid: &BallGrid, route: Route) -> Result<KernelMatrix> {
    let sys = SymmetricSystem::ball(split, grid)?;
    perturbed_resolvent_on(&sys, lambda, sign, route)
}

pub fn perturbed_resolvent_on<D: Nystrom>(sys: &SymmetricSystem<D>, lambda: f64, sign: Sign, route: Route) -> Result<KernelMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    let plus = match route {
        Route::Symmetric => symmetric_route(sys, C64::new(lambda, 0.0))?,
        Route::Direct => {
            let eps = [1e-2, 1e-3, 1e-4];
            let vals: Result<Vec<CMat>> = eps.iter().map(|e| direct_route(sys, C64::new(lambda, lambda * e))).collect();
            extrapolate_to_zero(&eps, &vals?)
        }
    };
    let values = match sign {
        Sign::Plus => plus,
        Sign::Minus => plus.map(|z| z.conj()),
    };
    Ok(KernelMatrix { values, weights: sys.weights.clone(), form: MatrixForm::Kernel })
}

fn symmetric_route<D: Nystrom>(sys: &SymmetricSystem<D>, mu: C64) -> Result<CMat> {
    let r = sys.free_matrix(mu);
    let n = sys.len();
    let m = sys.m_sym(mu);
    let lu = m.clone().lu();
    let dr = CMat::from_fn(n, n, |i, j| r[(i, j)] * sys.d[i]);
    let x = lu.solve(&dr).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    let rd = CMat::from_fn(n, n, |i, j| r[(i, j)] * sys.d[j]);
    Ok(r - rd * x)
}

/// (I + R diag(ωV))⁻¹ R at complex μ.
pub fn direct_route<D: Nystrom>(sys: &SymmetricSystem<D>, mu: C64) -> Result<CMat> {
    let r = sys.free_matrix(mu);
    let n = sys.len();
    let a = CMat::from_fn(n, n, |i, j| {
        let v = r[(i, j)] * (sys.weights[j] * sys.values[j]);
        if i == j {
            v + 1.0
        } else {
            v
        }
    });
    let (ainv, _) = inverse_with_condition(&a)?;
    Ok(ainv * r)
}

/// Relative Hilbert–Schmidt distance between two kernels on the same nodes.
pub fn hs_relative_difference(a: &KernelMatrix, b: &KernelMatrix) -> f64 {
    let sa = a.to_symmetric();
    frobenius(&(&sa - b.to_symmetric())) / frobenius(&sa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{split_potential, Potential};

    fn small_setup(c: f64) -> (BallGrid, PotentialSplit) {
        let g = BallGrid::new(6.0, 2).unwrap();
        let s = split_potential(&Potential::gaussian_well(c), &g).unwrap();
        (g, s)
    }

    #[test]
    fn symmetric_form_is_symmetric() {
        let (g, s) = small_setup(0.5);
        let m = assemble_m(0.05, &s, &g).unwrap();
        let sym = m.to_symmetric();
        assert!(frobenius(&(&sym - sym.transpose())) / frobenius(&sym) < 1e-12);
    }

    #[test]
    fn leading_order_is_rank_one() {
        let (g, s) = small_setup(0.5);
        let sys = SymmetricSystem::ball(&s, &g).unwrap();
        let l = 1e-9;
        let m = sys.m_sym(C64::new(l, 0.0)) * C64::new(l, 0.0);
        let lead = to_complex(&sys.projection_p()) * (a_plus() * s.v_l1);
        assert!(frobenius(&(&m - &lead)) / frobenius(&lead) < 1e-5);
    }

    #[test]
    fn projections_are_exact() {
        let (g, s) = small_setup(0.5);
        let sys = SymmetricSystem::ball(&s, &g).unwrap();
        let p = sys.projection_p();
        assert!((&p * &p - &p).norm() < 1e-12);
        let q = sys.projection_q();
        let qv = &q * nalgebra::DVector::from_vec(sys.d.clone());
        assert!(qv.norm() < 1e-12);
    }

    #[test]
    fn feshbach_formula_inverts_a() {
        let (g, s) = small_setup(0.5);
        let sys = SymmetricSystem::ball(&s, &g).unwrap();
        let f = sys.feshbach().unwrap();
        let p = sys.projection_p();
        for &l in &[1e-3, 0.02, 0.3] {
            let prod = f.a_matrix(l, &p) * f.a_inverse(l);
            let n = sys.len();
            assert!(frobenius(&(prod - CMat::identity(n, n))) < 1e-8);
        }
    }

    #[test]
    fn regularity_is_detected_for_shallow_well() {
        let (g, s) = small_setup(0.5);
        let r = detect_regularity(&s, &g).unwrap();
        assert!(r.is_regular() && r.sigma_min() > 0.0);
    }

    #[test]
    fn ladder_must_span_a_decade() {
        let (g, s) = small_setup(0.5);
        let ladder = [0.01, 0.012, 0.014, 0.016, 0.018, 0.02];
        assert!(matches!(expand_m_inverse(&s, &g, &ladder, ExpansionOptions::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn expansion_on_coarse_grid() {
        let (g, s) = small_setup(0.5);
        let ladder = crate::geometry::logspace(1e-3, 1e-1, 8);
        let e = expand_m_inverse(&s, &g, &ladder, ExpansionOptions::default()).unwrap();
        let d = &e.diagnostics;
        assert!((e.report.m2_slope - 2.0).abs() < 0.2, "{:?}", e.report);
        assert!((d.dm2_slope - 1.0).abs() < 0.2, "{d:?}");
        assert!(d.qd0q_gap < 1e-6 && d.m1_analytic_gap < 1e-5, "{d:?}");
        assert!((e.c_const - d.c_analytic).abs() < 1e-8 * d.c_analytic.abs().max(1.0));
        assert!(d.s_variation < 1e-8 && d.s_analytic_gap < 1e-8 && d.feshbach_residual < 1e-8, "{d:?}");
    }

    #[test]
    fn routes_agree_on_coarse_grid() {
        let (g, s) = small_setup(0.5);
        for &l in &[0.05, 0.7, 2.0] {
            let a = perturbed_resolvent(l, Sign::Plus, &s, &g, Route::Symmetric).unwrap();
            let b = perturbed_resolvent(l, Sign::Plus, &s, &g, Route::Direct).unwrap();
            let d = hs_relative_difference(&a, &b);
            assert!(d < 1e-5, "λ={l} diff={d}");
        }
    }

    #[test]
    fn kernel_forms_round_trip() {
        let w = vec![0.5, 2.0];
        let k = KernelMatrix {
            values: CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(2.0, 1.0), C64::new(2.0, 1.0), C64::new(3.0, 0.0)]),
            weights: w.clone(),
            form: MatrixForm::Kernel,
        };
        let ones = [C64::new(1.0, 0.0); 2];
        let applied = k.apply(&ones);
        assert!((applied[0] - (C64::new(0.5, 0.0) + C64::new(4.0, 2.0))).norm() < 1e-15);
        let op = KernelMatrix { values: k.to_operator(), weights: w.clone(), form: MatrixForm::Operator };
        assert!(frobenius(&(op.to_symmetric() - k.to_symmetric())) < 1e-14);
    }
}
