//! Pointwise bound envelopes and log-log decay fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, upper_envelope};
use crate::geometry::bracket;

/// Largest accepted growth of a fitted constant per doubling of the sample domain.
pub const MAX_GROWTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketSign {
    Minus,
    Plus,
}

/// C ⟨x⟩^{−a} ⟨y⟩^{−b} ⟨|x| ± |y|⟩^{−c}, times 1 + log⟨|x| ± |y|⟩ if `log_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEnvelope {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sign: BracketSign,
    pub log_factor: bool,
    pub constant: f64,
}

impl BoundEnvelope {
    pub fn family(a: f64, b: f64, c: f64, sign: BracketSign, log_factor: bool) -> Self {
        Self { a, b, c, sign, log_factor, constant: 1.0 }
    }

    pub fn shape(&self, x: f64, y: f64) -> f64 {
        let d = match self.sign {
            BracketSign::Minus => bracket(x - y),
            BracketSign::Plus => bracket(x + y),
        };
        let log = if self.log_factor { 1.0 + d.ln() } else { 1.0 };
        log / (bracket(x).powf(self.a) * bracket(y).powf(self.b) * d.powf(self.c))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.constant * self.shape(x, y)
    }
}

/// Least C with |K| ≤ C · shape on the samples (|x|, |y|, |K|).
pub fn envelope_constant(samples: &[(f64, f64, f64)], family: &BoundEnvelope) -> f64 {
    samples.iter().map(|&(x, y, k)| k.abs() / family.shape(x, y)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub envelope: BoundEnvelope,
    /// Constant on each nested sample set.
    pub constants: Vec<f64>,
    pub growth: Vec<f64>,
}

/// Fits the constant on nested sample sets, each reaching twice as far as the
/// previous; fails with `EnvelopeViolated` if it grows by more than
/// [`MAX_GROWTH`] per doubling.
pub fn envelope_fit(levels: &[Vec<(f64, f64, f64)>], family: BoundEnvelope) -> Result<EnvelopeFit> {
    if levels.is_empty() || levels.iter().any(|l| l.is_empty()) {
        return Err(Error::InvalidInput("envelope_fit needs non-empty sample sets".into()));
    }
    let constants: Vec<f64> = levels.iter().map(|l| envelope_constant(l, &family)).collect();
    let growth: Vec<f64> = constants.windows(2).map(|w| w[1] / w[0]).collect();
    if let Some(&g) = growth.iter().find(|g| **g > MAX_GROWTH) {
        return Err(Error::EnvelopeViolated { growth: g });
    }
    let envelope = BoundEnvelope { constant: *constants.last().unwrap(), ..family };
    Ok(EnvelopeFit { envelope, constants, growth })
}

/// Straight-line fit of log y against log x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

impl DecayFit {
    pub const MIN_POINTS: usize = 6;

    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self> {
        let (lx, ly): (Vec<f64>, Vec<f64>) = x
            .iter()
            .zip(y)
            .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
            .map(|(a, b)| (a.ln(), b.ln()))
            .unzip();
        if lx.len() < Self::MIN_POINTS {
            return Err(Error::InvalidInput(format!("decay fit needs {} positive points, got {}", Self::MIN_POINTS, lx.len())));
        }
        let f = line_fit(&lx, &ly);
        let lo = lx.iter().cloned().fold(f64::INFINITY, f64::min).exp();
        let hi = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
        Ok(Self { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared.clamp(0.0, 1.0), window: (lo, hi) })
    }

    /// Fit through the running maximum from the right, which bridges the
    /// zeros of oscillating magnitudes. `x` must be increasing.
    pub fn fit_envelope(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::fit(x, &upper_envelope(y))
    }
}
