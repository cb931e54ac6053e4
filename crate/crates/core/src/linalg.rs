//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse with a 1-norm condition number; fails when the matrix is
/// numerically singular.
pub fn inverse_with_condition(m: &CMat) -> Result<(CMat, f64)> {
    let n = m.nrows();
    let lu = m.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem { condition: f64::INFINITY });
    }
    let cond = one_norm(m) * one_norm(&inv);
    if n > 0 && cond > 1e14 {
        return Err(Error::SingularSystem { condition: cond });
    }
    Ok((inv, cond))
}

/// Largest singular value by power iteration on AᴴA from a fixed start.
pub fn spectral_norm(a: &CMat, iterations: usize) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut x = CVec::from_fn(n, |i, _| C64::new(1.0 + 0.01 * (i % 7) as f64, 0.003 * (i % 5) as f64));
    x /= C64::new(x.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..iterations {
        let y = a * &x;
        let z = a.adjoint() * &y;
        let nz = z.norm();
        if nz == 0.0 {
            return 0.0;
        }
        let new_est = nz.sqrt();
        x = z / C64::new(nz, 0.0);
        if (new_est - est).abs() <= 1e-12 * new_est {
            est = new_est;
            break;
        }
        est = new_est;
    }
    est
}

/// Householder reflector H = I − 2wwᵀ with H e₀ ∝ v; the remaining columns of
/// H are an orthonormal basis of v^⊥.
pub fn householder_for(v: &[f64]) -> RMat {
    let n = v.len();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut w: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let s = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += s;
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= wn);
    let mut h = RMat::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] -= 2.0 * w[i] * w[j];
        }
    }
    h
}

/// GMRES without restarts for A x = b with a matrix-free A. Returns the
/// solution and the number of Krylov steps taken.
pub fn gmres(apply: impl Fn(&[C64]) -> Vec<C64>, b: &[C64], tol: f64, max_iter: usize) -> Result<(Vec<C64>, usize)> {
    let n = b.len();
    let beta = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if beta == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); n], 0));
    }
    let m = max_iter.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = vec![b.iter().map(|z| z / beta).collect()];
    let mut h: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(m);
    let mut g = vec![C64::new(0.0, 0.0); m + 1];
    g[0] = C64::new(beta, 0.0);
    let mut residual = beta;
    for k in 0..m {
        let mut w = apply(&basis[k]);
        let mut col = vec![C64::new(0.0, 0.0); k + 2];
        for (j, v) in basis.iter().enumerate() {
            let hj: C64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= hj * y);
            col[j] = hj;
        }
        let hn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col[k + 1] = C64::new(hn, 0.0);
        for (j, &(c, s)) in rot.iter().enumerate() {
            let t = col[j] * c + s * col[j + 1];
            col[j + 1] = -s.conj() * col[j] + col[j + 1] * c;
            col[j] = t;
        }
        let (a, bb) = (col[k], col[k + 1]);
        let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
        let (c, s) = if a.norm() == 0.0 {
            (0.0, C64::new(1.0, 0.0))
        } else {
            let c = a.norm() / r;
            (c, (a / a.norm()) * bb.conj() / r)
        };
        col[k] = c * a + s * bb;
        col[k + 1] = C64::new(0.0, 0.0);
        g[k + 1] = -s.conj() * g[k];
        g[k] *= c;
        rot.push((c, s));
        h.push(col);
        residual = g[k + 1].norm();
        let done = residual <= tol * beta || hn <= 1e-300;
        if done || k + 1 == m {
            let dim = k + 1;
            let mut y = vec![C64::new(0.0, 0.0); dim];
            for i in (0..dim).rev() {
                let mut acc = g[i];
                for j in i + 1..dim {
                    acc -= h[j][i] * y[j];
                }
                y[i] = acc / h[i][i];
            }
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (yj, v) in y.iter().zip(&basis) {
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += yj * vi);
            }
            if done {
                return Ok((x, dim));
            }
            break;
        }
        basis.push(w.iter().map(|z| z / hn).collect());
    }
    Err(Error::SolverNotConverged { iterations: m, residual: residual / beta })
}

/// Neville extrapolation of samples (tᵢ, yᵢ) to t = 0, applied entrywise.
pub fn extrapolate_to_zero(ts: &[f64], ys: &[CMat]) -> CMat {
    assert_eq!(ts.len(), ys.len());
    let mut p: Vec<CMat> = ys.to_vec();
    let n = ts.len();
    for m in 1..n {
        for i in 0..n - m {
            let (ti, tj) = (ts[i], ts[i + m]);
            // P = (−tj·P_i + ti·P_{i+1}) / (ti − tj) evaluated at 0
            let a = C64::new(-tj / (ti - tj), 0.0);
            let b = C64::new(ti / (ti - tj), 0.0);
            p[i] = &p[i] * a + &p[i + 1] * b;
        }
    }
    p.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_complement_is_orthonormal() {
        let v = [0.3, -1.0, 2.0, 0.5];
        let h = householder_for(&v);
        let hh = &h * h.transpose();
        assert!((hh - RMat::identity(4, 4)).norm() < 1e-14);
        for j in 1..4 {
            let d: f64 = (0..4).map(|i| h[(i, j)] * v[i]).sum();
            assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn neville_recovers_polynomial_value() {
        let ts = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<CMat> =
            ts.iter().map(|t| CMat::from_element(1, 1, C64::new(2.0 + 3.0 * t - t * t + 0.5 * t * t * t, t * 1.0))).collect();
        let e = extrapolate_to_zero(&ts, &ys);
        assert!((e[(0, 0)] - C64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn power_iteration_matches_diagonal() {
        let a = to_complex(&RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -3.0, 2.0])));
        assert!((spectral_norm(&a, 200) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn gmres_matches_dense_solve() {
        let n = 30;
        let a = CMat::from_fn(n, n, |i, j| {
            let d = if i == j { C64::new(2.0, 0.5) } else { C64::new(0.0, 0.0) };
            d + C64::new(0.3 / (1.0 + (i as f64 - j as f64).abs()), 0.1 * ((i * j) as f64).sin()) / n as f64
        });
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let apply = |x: &[C64]| (&a * CVec::from_column_slice(x)).iter().copied().collect::<Vec<_>>();
        let (x, _) = gmres(apply, &b, 1e-13, n).unwrap();
        let exact = a.clone().lu().solve(&CVec::from_column_slice(&b)).unwrap();
        let err: f64 = x.iter().zip(exact.iter()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / exact.norm() < 1e-11);
    }

    #[test]
    fn singular_system_is_reported() {
        let a = CMat::from_element(3, 3, C64::new(1.0, 0.0));
        assert!(matches!(inverse_with_condition(&a), Err(Error::SingularSystem { .. })));
    }
}
