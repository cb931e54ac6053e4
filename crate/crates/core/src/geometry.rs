//! Points, quadrature rules and grids.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

/// Japanese bracket ⟨r⟩ = (1 + r²)^{1/2}.
#[inline]
pub fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x1: 0.0, x2: 0.0, x3: 0.0 };

    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    /// Point at radius `r` along the direction (θ, φ).
    pub fn spherical(r: f64, cos_theta: f64, phi: f64) -> Self {
        let s = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        Self::new(r * s * phi.cos(), r * s * phi.sin(), r * cos_theta)
    }

    pub fn norm(&self) -> f64 {
        (self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3).sqrt()
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2 + self.x3 * other.x3
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3::new(self.x1 * s, self.x2 * s, self.x3 * s)
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }
}

impl std::ops::Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl std::ops::Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule over the given panel edges.
pub fn composite_gauss(edges: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity((edges.len() - 1) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for e in edges.windows(2) {
        let (c, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(c + h * x);
            weights.push(h * w);
        }
    }
    (nodes, weights)
}

fn uniform_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridScheme {
    /// One Gauss–Legendre rule of order 4·resolution in r.
    ProductGauss,
    /// Composite Gauss–Legendre panels in r.
    Panelled { panel_width: f64, order: usize },
}

impl GridScheme {
    pub fn id(&self) -> String {
        match self {
            GridScheme::ProductGauss => "product_gauss".into(),
            GridScheme::Panelled { panel_width, order } => {
                format!("panelled(w={panel_width},q={order})")
            }
        }
    }
}

/// Product quadrature on the ball of radius `radius`: radial Gauss rule times
/// Gauss–Legendre in cos θ times the trapezoid rule in φ.
///
/// Nodes are stored radial-major, so shell `k` occupies
/// `k*n_angular .. (k+1)*n_angular`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    pub radius: f64,
    pub resolution: usize,
    pub scheme: GridScheme,
    pub nodes: Vec<Point3>,
    pub weights: Vec<f64>,
    pub radial_nodes: Vec<f64>,
    /// Radial weights including r², so Σ w_k f(r_k) ≈ ∫ f r² dr.
    pub radial_weights: Vec<f64>,
    pub n_angular: usize,
}

impl BallGrid {
    pub fn new(radius: f64, resolution: usize) -> Result<Self> {
        Self::with_scheme(radius, resolution, GridScheme::ProductGauss)
    }

    pub fn with_scheme(radius: f64, resolution: usize, scheme: GridScheme) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("grid radius must be positive, got {radius}")));
        }
        if resolution < 1 {
            return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
        }
        let (r, wr) = match scheme {
            GridScheme::ProductGauss => composite_gauss(&[0.0, radius], 4 * resolution),
            GridScheme::Panelled { panel_width, order } => {
                if !(panel_width > 0.0) || order < 1 {
                    return Err(Error::InvalidInput("panel width and order must be positive".into()));
                }
                let n = (radius / panel_width - 1e-9).ceil().max(1.0) as usize;
                composite_gauss(&uniform_edges(0.0, radius, n), order)
            }
        };
        let radial_weights: Vec<f64> = r.iter().zip(&wr).map(|(r, w)| w * r * r).collect();
        let n_theta = resolution + 1;
        let n_phi = 2 * (resolution + 1);
        let (ct, wt) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut ang = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            for k in 0..n_phi {
                ang.push((*c, (k as f64 + 0.5) * dphi, w * dphi));
            }
        }
        let mut nodes = Vec::with_capacity(r.len() * ang.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (rk, wk) in r.iter().zip(&radial_weights) {
            for &(c, phi, wa) in &ang {
                nodes.push(Point3::spherical(*rk, c, phi));
                weights.push(wk * wa);
            }
        }
        Ok(Self { radius, resolution, scheme, nodes, weights, radial_nodes: r, radial_weights, n_angular: ang.len() })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scheme_id(&self) -> String {
        self.scheme.id()
    }

    pub fn integrate(&self, f: impl Fn(Point3) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Spherical means of nodal values, one per radial node.
    pub fn shell_averages(&self, values: &[f64]) -> Vec<f64> {
        let ang_total = 4.0 * PI;
        (0..self.radial_nodes.len())
            .map(|k| {
                let s = k * self.n_angular;
                let wr = self.radial_weights[k];
                let sum: f64 = (s..s + self.n_angular).map(|i| values[i] * self.weights[i]).sum();
                if wr > 0.0 {
                    sum / (wr * ang_total)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Composite Gauss–Legendre rule on [0, R] for radial functions in ℝ³.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub radius: f64,
    pub nodes: Vec<f64>,
    /// Plain 1D weights (∫ f dr).
    pub weights_1d: Vec<f64>,
    /// Volume weights 4π r² dr.
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(radius: f64, panel_width: f64, order: usize) -> Result<Self> {
        if !(radius > 0.0) || !(panel_width > 0.0) || order == 0 {
            return Err(Error::InvalidInput("radial grid needs positive radius, width, order".into()));
        }
        let n = (radius / panel_width - 1e-9).ceil().max(1.0) as usize;
        Self::from_edges(&uniform_edges(0.0, radius, n), order)
    }

    /// Panels graded so that panel k covers [R(k/n)^g, R((k+1)/n)^g].
    pub fn graded(radius: f64, panels: usize, grading: f64, order: usize) -> Result<Self> {
        if panels == 0 || !(grading >= 1.0) {
            return Err(Error::InvalidInput("graded grid needs panels ≥ 1 and grading ≥ 1".into()));
        }
        let edges: Vec<f64> = (0..=panels).map(|k| radius * (k as f64 / panels as f64).powf(grading)).collect();
        Self::from_edges(&edges, order)
    }

    pub fn from_edges(edges: &[f64], order: usize) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|e| !(e[1] > e[0])) {
            return Err(Error::InvalidInput("panel edges must be increasing".into()));
        }
        let (nodes, weights_1d) = composite_gauss(edges, order);
        let weights = nodes.iter().zip(&weights_1d).map(|(r, w)| 4.0 * PI * r * r * w).collect();
        Ok(Self { radius: *edges.last().unwrap(), nodes, weights_1d, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w * f(*r)).sum()
    }
}

/// Oscillation-aware panels on [a, b]: each panel is at most π / max(1, scale)
/// wide and carries a Gauss–Legendre rule of fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPanels {
    pub range: (f64, f64),
    pub edges: Vec<f64>,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LambdaPanels {
    pub fn new(a: f64, b: f64, scale: f64, order: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("empty λ-range [{a}, {b}]")));
        }
        if order == 0 || !scale.is_finite() {
            return Err(Error::InvalidInput("panel order must be positive".into()));
        }
        let width = PI / scale.max(1.0);
        let n = ((b - a) / width - 1e-12).ceil().max(1.0) as usize;
        Ok(Self::uniform(a, b, n, order))
    }

    /// Panels over consecutive breakpoints; each piece is split so that a
    /// panel spans at most `phase` radians of e^{iλ·scale}.
    pub fn piecewise(breaks: &[f64], scale: f64, phase: f64, order: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) || !(phase > 0.0) || order == 0 {
            return Err(Error::InvalidInput("breakpoints must increase and phase must be positive".into()));
        }
        let width = phase / scale.max(1.0);
        let mut edges = vec![breaks[0]];
        for w in breaks.windows(2) {
            let n = ((w[1] - w[0]) / width - 1e-12).ceil().max(1.0) as usize;
            edges.extend(uniform_edges(w[0], w[1], n).into_iter().skip(1));
        }
        Ok(Self::from_edges(edges, order))
    }

    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let edges = uniform_edges(a, b, panels.max(1));
        let (nodes, weights) = composite_gauss(&edges, order);
        Self { range: (a, b), edges, order, nodes, weights }
    }

    pub fn from_edges(edges: Vec<f64>, order: usize) -> Self {
        let (nodes, weights) = composite_gauss(&edges, order);
        Self { range: (edges[0], *edges.last().unwrap()), edges, order, nodes, weights }
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Same range with every panel split in two.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for e in self.edges.windows(2) {
            edges.push(e[0]);
            edges.push(0.5 * (e[0] + e[1]));
        }
        edges.push(*self.edges.last().unwrap());
        Self::from_edges(edges, self.order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> C64) -> C64 {
        self.nodes.iter().zip(&self.weights).fold(C64::new(0.0, 0.0), |acc, (x, w)| acc + f(*x) * *w)
    }

    pub fn integrate_real(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Vector-valued samples on the nodes of λ-panels with barycentric Lagrange
/// interpolation inside each panel.
#[derive(Debug, Clone)]
pub struct PanelTable {
    panels: LambdaPanels,
    reference: Vec<f64>,
    bary: Vec<f64>,
    values: Vec<Vec<C64>>,
}

impl PanelTable {
    /// Samples `f` at every panel node, in parallel.
    pub fn build(panels: LambdaPanels, f: impl Fn(f64) -> Result<Vec<C64>> + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let values = panels.nodes.par_iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
        let (reference, _) = gauss_legendre(panels.order);
        let bary = (0..reference.len())
            .map(|j| {
                let p: f64 = (0..reference.len()).filter(|&k| k != j).map(|k| reference[j] - reference[k]).product();
                1.0 / p
            })
            .collect();
        Ok(Self { panels, reference, bary, values })
    }

    pub fn panels(&self) -> &LambdaPanels {
        &self.panels
    }

    /// Interpolated vector at λ inside the panel range.
    pub fn eval(&self, lambda: f64) -> Vec<C64> {
        let e = &self.panels.edges;
        let k = e.partition_point(|&x| x <= lambda).clamp(1, e.len() - 1) - 1;
        let (a, b) = (e[k], e[k + 1]);
        let t = (2.0 * lambda - a - b) / (b - a);
        let q = self.panels.order;
        let block = &self.values[k * q..(k + 1) * q];
        if let Some(j) = self.reference.iter().position(|&x| x == t) {
            return block[j].clone();
        }
        let coef: Vec<f64> = self.reference.iter().zip(&self.bary).map(|(x, w)| w / (t - x)).collect();
        let total: f64 = coef.iter().sum();
        let mut out = vec![C64::new(0.0, 0.0); block[0].len()];
        for (c, v) in coef.iter().zip(block) {
            let c = c / total;
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x * c);
        }
        out
    }
}

/// Uniformly distributed points in the ball of radius `radius`.
pub fn sample_ball(seed: u64, n: usize, radius: f64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if p.norm() <= 1.0 {
            out.push(p.scale(radius));
        }
    }
    out
}

/// `n` points at radius `r` in reproducible pseudo-random directions.
pub fn sample_sphere(seed: u64, n: usize, r: f64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            Point3::spherical(r, c, phi)
        })
        .collect()
}

/// `n` log-spaced values in [a, b].
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_table_interpolates_band_limited_functions() {
        let p = LambdaPanels::new(0.0, 10.0, 4.0, 16).unwrap();
        let t = PanelTable::build(p, |l| Ok(vec![C64::from_polar(1.0, 4.0 * l), C64::new((-l).exp(), 0.0)])).unwrap();
        for &l in &[0.0, 0.013, 3.3, 7.77, 10.0] {
            let v = t.eval(l);
            assert!((v[0] - C64::from_polar(1.0, 4.0 * l)).norm() < 1e-12);
            assert!((v[1].re - (-l).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn unit_ball_volume() {
        let g = BallGrid::new(1.0, 4).unwrap();
        assert_eq!(g.len(), 800);
        let vol: f64 = g.weights.iter().sum();
        assert!((vol - 4.0 * PI / 3.0).abs() < 1e-3);
        assert!((vol - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_integral_on_ball() {
        let g = BallGrid::new(6.0, 8).unwrap();
        let q = g.integrate(|p| (-p.norm().powi(2)).exp());
        assert!((q - PI.powf(1.5)).abs() < 1e-6);
    }

    #[test]
    fn gaussian_refinement_converges() {
        let exact = PI.powf(1.5);
        let err = |res| (BallGrid::new(6.0, res).unwrap().integrate(|p| (-p.dot(&p)).exp()) - exact).abs();
        let (e1, e2) = (err(2), err(4));
        assert!(e2 < e1 / 10.0 || e2 < 1e-12, "{e1} {e2}");
    }

    #[test]
    fn angular_rule_exact_for_low_harmonics() {
        let g = BallGrid::new(1.0, 3).unwrap();
        // x1² x3⁴ has degree 6 ≤ 2·3 + 1; ∫_{S²} x² z⁴ = 4π/35.
        let shell: f64 = (0..g.n_angular)
            .map(|i| {
                let p = g.nodes[i].scale(1.0 / g.nodes[i].norm());
                g.weights[i] / g.radial_weights[0] * p.x1.powi(2) * p.x3.powi(4)
            })
            .sum();
        assert!((shell - 4.0 * PI / 35.0).abs() < 1e-13);
    }

    #[test]
    fn panelled_indicator_is_exact() {
        let g = BallGrid::with_scheme(2.0, 3, GridScheme::Panelled { panel_width: 0.5, order: 6 }).unwrap();
        let q = g.integrate(|p| if p.norm() <= 1.0 { 1.0 } else { 0.0 });
        assert!((q - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_panel_count_follows_scale() {
        let p = LambdaPanels::new(0.0, 0.1, 1000.0, 8).unwrap();
        assert!(p.panel_count() >= 32);
        assert!(LambdaPanels::new(1.0, 1.0, 1.0, 8).is_err());
    }

    #[test]
    fn oscillatory_exponential() {
        let p = LambdaPanels::new(0.0, 1.0, 50.0, 16).unwrap();
        let q = p.integrate(|l| C64::new(0.0, 50.0 * l).exp());
        let exact = (C64::new(0.0, 50.0).exp() - 1.0) / C64::new(0.0, 50.0);
        assert!((q - exact).norm() < 1e-10);
        assert_eq!(p.refined().panel_count(), 2 * p.panel_count());
    }

    #[test]
    fn radial_grid_volume_weights() {
        let g = RadialGrid::new(6.0, 0.5, 8).unwrap();
        let q = g.integrate(|r| (-r * r).exp());
        assert!((q - PI.powf(1.5)).abs() < 1e-3);
        let gg = RadialGrid::graded(2.0, 10, 3.0, 8).unwrap();
        assert!((gg.integrate(|_| 1.0) - 4.0 * PI * 8.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample_ball(7, 20, 3.0), sample_ball(7, 20, 3.0));
        assert!(sample_ball(7, 200, 3.0).iter().all(|p| p.norm() <= 3.0));
        let s = sample_sphere(1, 5, 2.0);
        assert!(s.iter().all(|p| (p.norm() - 2.0).abs() < 1e-12));
    }
}
