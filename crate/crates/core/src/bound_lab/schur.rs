//! Schur row/column sups of radial kernels and their trend in the domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RadialGrid;
use crate::wave_operator::UniformKernel;

/// Increment ratio under domain doubling below which a sup counts as saturating.
pub const SATURATION_RATIO: f64 = 0.75;

/// |K| on a product of radial grids with the volume weights of both factors.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSamples {
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    /// Row-major in x.
    pub abs: Vec<f64>,
}

impl KernelSamples {
    pub fn from_fn(gx: &RadialGrid, gy: &RadialGrid, k: impl Fn(f64, f64) -> f64) -> Self {
        let mut abs = Vec::with_capacity(gx.len() * gy.len());
        for &x in &gx.nodes {
            abs.extend(gy.nodes.iter().map(|&y| k(x, y).abs()));
        }
        Self { rx: gx.nodes.clone(), ry: gy.nodes.clone(), wx: gx.weights.clone(), wy: gy.weights.clone(), abs }
    }

    /// Midpoint grid of a uniform kernel with weights 4πr²h.
    pub fn from_uniform(k: &UniformKernel) -> Self {
        let r: Vec<f64> = (0..k.n).map(|i| k.radius(i)).collect();
        let w: Vec<f64> = r.iter().map(|r| 4.0 * std::f64::consts::PI * r * r * k.h).collect();
        Self { rx: r.clone(), ry: r, wx: w.clone(), wy: w, abs: k.values.iter().map(|v| v.norm()).collect() }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.abs[i * self.ry.len() + j]
    }

    /// sup_x ∫|K(x, y)|dy and sup_y ∫|K(x, y)|dx over |x|, |y| ≤ radius.
    pub fn sums(&self, radius: f64) -> (f64, f64) {
        let nx = self.rx.partition_point(|&r| r <= radius);
        let ny = self.ry.partition_point(|&r| r <= radius);
        let mut row = 0.0f64;
        let mut cols = vec![0.0; ny];
        for i in 0..nx {
            let mut s = 0.0;
            for (j, c) in cols.iter_mut().enumerate() {
                let a = self.at(i, j);
                s += a * self.wy[j];
                *c += a * self.wx[i];
            }
            row = row.max(s);
        }
        (row, cols.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub radii: Vec<f64>,
    pub row_sups: Vec<f64>,
    pub col_sups: Vec<f64>,
    /// Successive increment ratios (s_{k+1} − s_k)/(s_k − s_{k−1}).
    pub row_ratios: Vec<f64>,
    pub col_ratios: Vec<f64>,
    pub saturating: bool,
}

fn increment_ratios(s: &[f64]) -> Vec<f64> {
    s.windows(3)
        .map(|w| {
            let (d0, d1) = (w[1] - w[0], w[2] - w[1]);
            if d1.abs() <= 1e-12 * w[2].abs() {
                0.0
            } else {
                d1 / d0
            }
        })
        .collect()
}

/// Row and column sups on nested domains; saturating iff the last increment
/// ratio of both is below [`SATURATION_RATIO`].
pub fn schur_test(samples: &KernelSamples, radii: &[f64]) -> Result<SchurReport> {
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("schur_test needs at least three increasing radii".into()));
    }
    let (row_sups, col_sups): (Vec<f64>, Vec<f64>) = radii.iter().map(|&r| samples.sums(r)).unzip();
    let row_ratios = increment_ratios(&row_sups);
    let col_ratios = increment_ratios(&col_sups);
    let ok = |r: &[f64]| r.last().is_some_and(|x| x.abs() < SATURATION_RATIO);
    let saturating = ok(&row_ratios) && ok(&col_ratios);
    Ok(SchurReport { radii: radii.to_vec(), row_sups, col_sups, row_ratios, col_ratios, saturating })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::bracket;
    use std::f64::consts::PI;

    fn model(c: f64) -> impl Fn(f64, f64) -> f64 {
        move |x, y| 1.0 / (bracket(x) * bracket(y) * bracket(x - y).powf(c))
    }

    #[test]
    fn ball_indicator_has_volume_sums() {
        let g = RadialGrid::from_edges(&[0.0, 0.5, 1.0, 2.0, 4.0], 16).unwrap();
        let k = KernelSamples::from_fn(&g, &g, |x, y| if x <= 1.0 && y <= 1.0 { 1.0 } else { 0.0 });
        let (row, col) = k.sums(4.0);
        assert!((row - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((col - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_decay_saturates_quadratic_does_not() {
        let g = RadialGrid::new(320.0, 0.5, 8).unwrap();
        let radii = [40.0, 80.0, 160.0, 320.0];
        let good = schur_test(&KernelSamples::from_fn(&g, &g, model(3.0)), &radii).unwrap();
        let bad = schur_test(&KernelSamples::from_fn(&g, &g, model(2.0)), &radii).unwrap();
        assert!(good.saturating, "{good:?}");
        assert!(!bad.saturating, "{bad:?}");
        assert!(bad.row_ratios.iter().all(|r| *r > 0.85));
    }

    #[test]
    fn dominated_kernels_have_smaller_sums() {
        let g = RadialGrid::new(60.0, 1.0, 8).unwrap();
        let a = KernelSamples::from_fn(&g, &g, model(3.0));
        let b = KernelSamples::from_fn(&g, &g, |x, y| 0.5 * model(3.0)(x, y) * (x * y).cos().abs());
        let (ra, ca) = a.sums(60.0);
        let (rb, cb) = b.sums(60.0);
        assert!(rb <= ra && cb <= ca);
    }
}
