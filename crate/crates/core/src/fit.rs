//! Least-squares fits on logarithmic scales.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y ≈ intercept + slope·x.
pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let r_squared = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LineFit { slope, intercept: my - slope * mx, r_squared }
}

/// Fit log y ≈ log C + slope · log x; non-positive values are skipped.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> LineFit {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite()).map(|(a, b)| (a.ln(), b.ln())).unzip();
    line_fit(&lx, &ly)
}

/// Running maximum from the right: env[i] = max_{j ≥ i} y[j]. Used to fit
/// decay of oscillating magnitudes through their upper envelope.
pub fn upper_envelope(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let x: Vec<f64> = (1..20).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x.powf(-2.5)).collect();
        let f = loglog_fit(&x, &y);
        assert!((f.slope + 2.5).abs() < 1e-12);
        assert!((f.intercept.exp() - 3.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_is_monotone() {
        let e = upper_envelope(&[1.0, 5.0, 2.0, 3.0, 0.5]);
        assert_eq!(e, vec![5.0, 5.0, 3.0, 3.0, 0.5]);
    }
}
