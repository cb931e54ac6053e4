//! Built-in potentials and the symmetric factorisation V = U v².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bracket, BallGrid, Point3};

/// Decay exponent declared for the exponentially or compactly decaying models.
const FAST_DECAY_BETA: f64 = 12.0;

/// Real radial potential with a closed-form profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum Potential {
    /// −c e^{−|x|²}
    GaussianWell { c: f64 },
    /// −c e^{−1/(1−|x|²)} inside the unit ball
    Bump { c: f64 },
    /// c ⟨x⟩^{−β}
    Polyweight { c: f64, beta: f64 },
    /// c1 e^{−k1|x|} + c2 e^{−k2|x|}
    ExpMix { c1: f64, k1: f64, c2: f64, k2: f64 },
}

impl Potential {
    pub fn gaussian_well(c: f64) -> Self {
        Potential::GaussianWell { c }
    }

    pub fn bump(c: f64) -> Self {
        Potential::Bump { c }
    }

    pub fn polyweight(c: f64, beta: f64) -> Self {
        Potential::Polyweight { c, beta }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::GaussianWell { .. } => "gaussian_well",
            Potential::Bump { .. } => "bump",
            Potential::Polyweight { .. } => "polyweight",
            Potential::ExpMix { .. } => "exp_mix",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Potential::GaussianWell { c } | Potential::Bump { c } => c.is_finite(),
            Potential::Polyweight { c, beta } => c.is_finite() && beta > 0.0 && beta.is_finite(),
            Potential::ExpMix { c1, k1, c2, k2 } => c1.is_finite() && c2.is_finite() && k1 > 0.0 && k2 > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad parameters for {}", self.name())))
        }
    }

    pub fn radial(&self, r: f64) -> f64 {
        match *self {
            Potential::GaussianWell { c } => -c * (-r * r).exp(),
            Potential::Bump { c } => {
                if r < 1.0 {
                    -c * (-1.0 / (1.0 - r * r)).exp()
                } else {
                    0.0
                }
            }
            Potential::Polyweight { c, beta } => c * bracket(r).powf(-beta),
            Potential::ExpMix { c1, k1, c2, k2 } => c1 * (-k1 * r).exp() + c2 * (-k2 * r).exp(),
        }
    }

    pub fn evaluate(&self, p: Point3) -> f64 {
        self.radial(p.norm())
    }

    /// Declared decay exponent β in |V(x)| ≤ C⟨x⟩^{−β}.
    pub fn beta(&self) -> f64 {
        match *self {
            Potential::Polyweight { beta, .. } => beta,
            _ => FAST_DECAY_BETA,
        }
    }

    /// Constant C in |V(x)| ≤ C⟨x⟩^{−β}.
    pub fn c_bound(&self) -> f64 {
        let b = FAST_DECAY_BETA;
        match *self {
            Potential::GaussianWell { c } => {
                // sup_t e^{1−t} t^{β/2} with t = ⟨x⟩²
                let t = b / 2.0;
                c.abs() * (1.0 - t).exp() * t.powf(t)
            }
            Potential::Bump { c } => c.abs() * 2f64.powf(b / 2.0) / std::f64::consts::E,
            Potential::Polyweight { c, .. } => c.abs(),
            Potential::ExpMix { .. } => {
                let sup = (0..=40_000)
                    .map(|k| {
                        let r = k as f64 * 0.005;
                        self.radial(r).abs() * bracket(r).powf(b)
                    })
                    .fold(0.0, f64::max);
                sup * 1.01
            }
        }
    }

    /// Radius beyond which |V| < 1e−12 · C.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Potential::GaussianWell { .. } => 6.0,
            Potential::Bump { .. } => 1.0,
            Potential::Polyweight { beta, .. } => {
                let t = 1e12f64.powf(1.0 / beta);
                (t * t - 1.0).sqrt()
            }
            Potential::ExpMix { c1, k1, c2, k2 } => {
                let cb = self.c_bound().max(f64::MIN_POSITIVE);
                let need = |c: f64, k: f64| {
                    if c == 0.0 {
                        0.0
                    } else {
                        ((2.0 * c.abs() / (1e-12 * cb)).ln() / k).max(0.0)
                    }
                };
                need(c1, k1).max(need(c2, k2)).max(1.0)
            }
        }
    }
}

/// Nodal values of U = sgn V and v = |V|^{1/2} on a quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSplit {
    pub potential: Potential,
    pub values: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub weights: Vec<f64>,
    pub v_l1: f64,
}

impl PotentialSplit {
    /// Split from nodal samples and the matching quadrature weights.
    pub fn from_samples(potential: Potential, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::InvalidInput("values and weights differ in length".into()));
        }
        let u = values.iter().map(|&x| if x >= 0.0 { 1.0 } else { -1.0 }).collect();
        let v = values.iter().map(|x| x.abs().sqrt()).collect();
        let v_l1: f64 = values.iter().zip(&weights).map(|(x, w)| x.abs() * w).sum();
        if v_l1 < 1e-14 {
            return Err(Error::DegeneratePotential { v_l1 });
        }
        Ok(Self { potential, values, u, v, weights, v_l1 })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Symmetrised v-vector ṽ_j = ω_j^{1/2} v_j, with ‖ṽ‖² = ‖V‖₁.
    pub fn v_tilde(&self) -> Vec<f64> {
        self.v.iter().zip(&self.weights).map(|(v, w)| v * w.sqrt()).collect()
    }
}

/// Factor V on a ball grid; the grid must cover the declared support radius.
pub fn split_potential(potential: &Potential, grid: &BallGrid) -> Result<PotentialSplit> {
    potential.validate()?;
    let support = potential.support_radius();
    if grid.radius + 1e-12 < support {
        return Err(Error::GridTooSmall { grid_radius: grid.radius, support_radius: support });
    }
    let values = grid.nodes.iter().map(|p| potential.evaluate(*p)).collect();
    PotentialSplit::from_samples(*potential, values, grid.weights.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_split_matches_closed_form_norm() {
        let g = BallGrid::new(6.0, 4).unwrap();
        let s = split_potential(&Potential::gaussian_well(1.0), &g).unwrap();
        assert!((s.v_l1 - PI.powf(1.5)).abs() < 1e-6);
        assert!(s.u.iter().all(|&u| u == -1.0));
        for i in 0..s.len() {
            assert!((s.u[i] * s.v[i] * s.v[i] - s.values[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_change_at_ln2() {
        let pot = Potential::ExpMix { c1: 0.5, k1: 1.0, c2: -1.0, k2: 2.0 };
        let r0 = 2f64.ln();
        assert!(pot.radial(r0 - 1e-6) < 0.0 && pot.radial(r0 + 1e-6) > 0.0);
        let g = BallGrid::new(pot.support_radius(), 4).unwrap();
        let s = split_potential(&pot, &g).unwrap();
        assert!(s.u.iter().any(|&u| u > 0.0) && s.u.iter().any(|&u| u < 0.0));
    }

    #[test]
    fn zero_potential_is_degenerate() {
        let g = BallGrid::new(6.0, 2).unwrap();
        let err = split_potential(&Potential::gaussian_well(0.0), &g).unwrap_err();
        assert!(matches!(err, Error::DegeneratePotential { .. }));
    }

    #[test]
    fn grid_must_cover_support() {
        let g = BallGrid::new(3.0, 2).unwrap();
        assert!(matches!(split_potential(&Potential::gaussian_well(1.0), &g), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn decay_bounds_hold() {
        let pots = [
            Potential::gaussian_well(0.7),
            Potential::bump(2.0),
            Potential::polyweight(1.5, 5.5),
            Potential::polyweight(1.5, 9.5),
            Potential::ExpMix { c1: 0.5, k1: 1.0, c2: -1.0, k2: 2.0 },
        ];
        for p in pots {
            let (c, b, rs) = (p.c_bound(), p.beta(), p.support_radius());
            for k in 0..4000 {
                let r = k as f64 * 0.05;
                assert!(p.radial(r).abs() <= c * bracket(r).powf(-b) * (1.0 + 1e-12), "{p:?} r={r}");
                if r > rs {
                    assert!(p.radial(r).abs() < 1e-12 * c, "{p:?} r={r}");
                }
            }
        }
    }
}
