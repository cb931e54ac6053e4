//! One-dimensional Hilbert-transform checks behind the singular kernel Ã.
//!
//! In the variables s = |x|⁴, r = |y|⁴ the radial part of Ã becomes the
//! kernel 1/(s − r) acting on u₁(r) = r^{−1/4} M_u(r^{1/4}), with M_u the
//! spherical average. The window |s^{1/4} − r^{1/4}| < 1 splits into a
//! centred truncation around s and the one-sided piece
//! I_s = (2s − (s^{1/4} − 1)⁴, (s^{1/4} + 1)⁴), which the maximal function
//! controls. Functions are piecewise constant on the cells of a [`LineGrid`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::sample_ball;

/// Smallest s for which the one-sided piece is evaluated.
pub const K_PIECE_START: f64 = 16.0;
/// 2 · sup (b − s)/(s − a) over s ≥ 16, from s^{3/4} < r − s < 15 s^{3/4}.
pub const K_PIECE_BOUND: f64 = 30.0;

/// Cells [e_k, e_{k+1}] with representative nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid {
    pub edges: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineGrid {
    fn from_edges(edges: Vec<f64>, nodes: Vec<f64>) -> Self {
        let weights = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Self { edges, nodes, weights }
    }

    pub fn uniform(a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / n as f64;
        let edges = (0..=n).map(|k| a + h * k as f64).collect();
        let nodes = (0..n).map(|k| a + h * (k as f64 + 0.5)).collect();
        Self::from_edges(edges, nodes)
    }

    /// s = ρ⁴ with ρ uniform on [0, ρ_max]; nodes at the images of the
    /// ρ-midpoints.
    pub fn quartic(rho_max: f64, n: usize) -> Self {
        let h = rho_max / n as f64;
        let edges = (0..=n).map(|k| (h * k as f64).powi(4)).collect();
        let nodes = (0..n).map(|k| (h * (k as f64 + 0.5)).powi(4)).collect();
        Self::from_edges(edges, nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// I_s = (2s − (s^{1/4} − 1)⁴, (s^{1/4} + 1)⁴).
pub fn i_s(s: f64) -> (f64, f64) {
    let q = s.powf(0.25);
    (2.0 * s - (q - 1.0).powi(4), (q + 1.0).powi(4))
}

/// I_s ⊂ [s, 16s] and s^{3/4} < r − s < 15 s^{3/4} at both ends of I_s.
pub fn i_s_geometry_holds(s: f64) -> bool {
    let (lo, hi) = i_s(s);
    let t = s.powf(0.75);
    lo >= s && hi <= 16.0 * s && lo - s > t && hi - s < 15.0 * t
}

/// Σ_{|s_i − s_j| > ε} w_j u_j / (s_i − s_j).
pub fn truncated_hilbert(grid: &LineGrid, u: &[f64], i: usize, eps: f64) -> f64 {
    let s = grid.nodes[i];
    grid.nodes.iter().zip(&grid.weights).zip(u).filter(|((t, _), _)| (s - **t).abs() > eps).map(|((t, w), u)| w * u / (s - t)).sum()
}

/// sup_ε |Σ_{|s_i − s_j| > ε} w_j u_j / (s_i − s_j)|, removing nodes in order
/// of distance from both sides.
pub fn maximal_truncated_hilbert(grid: &LineGrid, u: &[f64]) -> Vec<f64> {
    let s = &grid.nodes;
    let n = s.len();
    (0..n)
        .map(|i| {
            let term = |j: usize| grid.weights[j] * u[j] / (s[i] - s[j]);
            let mut total: f64 = (0..n).filter(|&j| j != i).map(term).sum();
            let mut best = total.abs();
            let (mut l, mut r) = (i as isize - 1, i + 1);
            while l >= 0 || r < n {
                let dl = if l >= 0 { s[i] - s[l as usize] } else { f64::INFINITY };
                let dr = if r < n { s[r] - s[i] } else { f64::INFINITY };
                if dl <= dr {
                    total -= term(l as usize);
                    l -= 1;
                } else {
                    total -= term(r);
                    r += 1;
                }
                best = best.max(total.abs());
            }
            best
        })
        .collect()
}

/// Centred Hardy–Littlewood maximal function of the piecewise-constant
/// function, exact over windows ending at cell edges.
pub fn maximal_function(grid: &LineGrid, u: &[f64]) -> Vec<f64> {
    let e = &grid.edges;
    let n = grid.len();
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + grid.weights[k] * u[k].abs();
    }
    // mass of |u| on [e_0, x]
    let mass = |x: f64, k: usize| -> f64 {
        let x = x.clamp(e[0], e[n]);
        let k = k.min(n - 1);
        prefix[k] + u[k].abs() * (x - e[k]).max(0.0)
    };
    (0..n)
        .map(|i| {
            let s = grid.nodes[i];
            let (mut l, mut r) = (i as isize, i + 1);
            let mut best = u[i].abs();
            while l >= 0 || r <= n {
                let dl = if l >= 0 { s - e[l as usize] } else { f64::INFINITY };
                let dr = if r <= n { e[r] - s } else { f64::INFINITY };
                let eps = dl.min(dr);
                if !eps.is_finite() {
                    break;
                }
                let kl = grid.edges.partition_point(|&x| x <= s - eps).saturating_sub(1);
                let kr = grid.edges.partition_point(|&x| x <= s + eps).saturating_sub(1);
                let m = mass(s + eps, kr) - mass(s - eps, kl);
                if eps > 0.0 {
                    best = best.max(m / (2.0 * eps));
                }
                if dl <= dr {
                    l -= 1;
                } else {
                    r += 1;
                }
            }
            best
        })
        .collect()
}

/// Σ_{s_j ∈ I_s} w_j u_j / (s − s_j) for s ≥ 16, zero below.
pub fn k_piece(grid: &LineGrid, u: &[f64]) -> Vec<f64> {
    grid.nodes
        .iter()
        .map(|&s| {
            if s < K_PIECE_START {
                return 0.0;
            }
            let (lo, hi) = i_s(s);
            let a = grid.nodes.partition_point(|&t| t <= lo);
            let b = grid.nodes.partition_point(|&t| t < hi);
            (a..b).map(|j| grid.weights[j] * u[j] / (s - grid.nodes[j])).sum()
        })
        .collect()
}

/// (Σ w |f|^p s^{(p−1)/4})^{1/p}.
pub fn weighted_norm(grid: &LineGrid, f: &[f64], p: f64) -> f64 {
    let e = (p - 1.0) / 4.0;
    grid.nodes.iter().zip(&grid.weights).zip(f).map(|((s, w), f)| w * f.abs().powf(p) * s.powf(e)).sum::<f64>().powf(1.0 / p)
}

/// Sum of at most five Gaussians a·exp(−|x − c|²/w²) with centres in the
/// ball of radius 3 and widths in [0.5, 2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSum {
    pub terms: Vec<(f64, f64, f64)>,
}

impl GaussianSum {
    /// (amplitude, |centre|, width) triples drawn from `seed`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=5);
        let centres = sample_ball(seed ^ 0x9e37_79b9_7f4a_7c15, n, 3.0);
        let terms = centres
            .iter()
            .map(|c| {
                let a: f64 = rng.random_range(-1.0..1.0);
                (a, c.norm(), rng.random_range(0.5..2.0))
            })
            .collect();
        Self { terms }
    }

    /// Mean over the sphere of radius ρ.
    pub fn spherical_average(&self, rho: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, c, w)| {
                let k = 2.0 * rho * c / (w * w);
                if k < 1e-8 {
                    a * (-(rho * rho + c * c) / (w * w)).exp()
                } else {
                    a * (w * w / (4.0 * rho * c)) * ((-(rho - c).powi(2) / (w * w)).exp() - (-(rho + c).powi(2) / (w * w)).exp())
                }
            })
            .sum()
    }

    /// u₁(s) = s^{−1/4} M_u(s^{1/4}) on the nodes of `grid`.
    pub fn profile(&self, grid: &LineGrid) -> Vec<f64> {
        grid.nodes.iter().map(|&s| self.spherical_average(s.powf(0.25)) / s.powf(0.25)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertReport {
    pub p: f64,
    pub hilbert_ratio: f64,
    pub maximal_ratio: f64,
    /// max over s ≥ 16 of |Ku(s)| / 𝓜u(s).
    pub k_domination: f64,
}

pub fn truncated_hilbert_suite(grid: &LineGrid, u: &[f64], p: f64) -> HilbertReport {
    let h = maximal_truncated_hilbert(grid, u);
    let m = maximal_function(grid, u);
    let k = k_piece(grid, u);
    let nu = weighted_norm(grid, u, p);
    let k_domination = grid
        .nodes
        .iter()
        .zip(k.iter().zip(&m))
        .filter(|(s, _)| **s >= K_PIECE_START)
        .map(|(_, (k, m))| {
            if *m > 0.0 {
                k.abs() / m
            } else if *k == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    HilbertReport { p, hilbert_ratio: weighted_norm(grid, &h, p) / nu, maximal_ratio: weighted_norm(grid, &m, p) / nu, k_domination }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_s_geometry() {
        let (lo, hi) = i_s(16.0);
        assert_eq!((lo, hi), (31.0, 81.0));
        for s in [16.0, 17.5, 81.0, 256.0, 1e4, 1e6] {
            assert!(i_s_geometry_holds(s), "{s}");
        }
    }

    #[test]
    fn constant_on_symmetric_window_has_zero_transform() {
        let g = LineGrid::uniform(0.0, 9.9, 99);
        let u = vec![1.0; 99];
        for eps in [0.05, 0.5, 2.0] {
            assert!(truncated_hilbert(&g, &u, 49, eps).abs() < 1e-12);
        }
        let mut v = vec![0.0; 99];
        v[30..70].iter_mut().for_each(|x| *x = 1.0);
        assert!(truncated_hilbert(&g, &v, 49, 0.3).abs() > 0.0);
    }

    #[test]
    fn maximal_transform_dominates_every_truncation() {
        let g = LineGrid::uniform(0.0, 10.0, 80);
        let u: Vec<f64> = g.nodes.iter().map(|s| (-(s - 4.0) * (s - 4.0)).exp() * (3.0 * s).cos()).collect();
        let h = maximal_truncated_hilbert(&g, &u);
        for i in [5, 33, 60] {
            for eps in [0.0, 0.2, 1.0, 3.3] {
                assert!(truncated_hilbert(&g, &u, i, eps).abs() <= h[i] + 1e-12);
            }
        }
    }

    #[test]
    fn maximal_function_of_indicator() {
        let g = LineGrid::uniform(0.0, 4.0, 400);
        let u: Vec<f64> = g.nodes.iter().map(|s| if (1.0..3.0).contains(s) { 1.0 } else { 0.0 }).collect();
        let m = maximal_function(&g, &u);
        let at = |s: f64| m[g.nodes.partition_point(|&t| t < s)];
        assert!((at(2.0) - 1.0).abs() < 1e-12);
        // outside, the best window just reaches the far end of the support
        let s = g.nodes[g.nodes.partition_point(|&t| t < 3.5)];
        assert!((at(3.5) - 2.0 / (2.0 * (s - 1.0))).abs() < 1e-12, "{}", at(3.5));
    }

    #[test]
    fn spherical_average_matches_quadrature() {
        let u = GaussianSum::random(7);
        let (x, w) = crate::geometry::gauss_legendre(80);
        for rho in [0.3, 1.7, 4.0] {
            let q: f64 = x
                .iter()
                .zip(&w)
                .map(|(t, wt)| {
                    wt * u.terms.iter().map(|&(a, c, s)| a * (-(rho * rho + c * c - 2.0 * rho * c * t) / (s * s)).exp()).sum::<f64>()
                })
                .sum::<f64>()
                / 2.0;
            assert!((q - u.spherical_average(rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn k_piece_is_dominated_on_random_inputs() {
        let g = LineGrid::quartic(14.0, 500);
        for seed in 0..5 {
            let u = GaussianSum::random(seed).profile(&g);
            let r = truncated_hilbert_suite(&g, &u, 2.0);
            assert!(r.k_domination <= K_PIECE_BOUND, "{r:?}");
        }
    }
}
