//! Numerical laboratory for scattering of the fourth-order operator Δ² + V on ℝ³.
//!
//! The crate is organised bottom-up: quadrature and grids, potentials, free
//! resolvent kernels, the symmetric resolvent system and its threshold
//! expansion, wave-operator kernels, and finally the bound/probe toolbox.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound_lab;
pub mod error;
pub mod fit;
pub mod free_resolvent;
pub mod geometry;
pub mod linalg;
pub mod m_matrix;
pub mod potentials;
pub mod radial;
pub mod wave_operator;

pub use error::{Error, Result};
pub use geometry::{bracket, BallGrid, GridScheme, LambdaPanels, Point3, RadialGrid};
pub use potentials::{split_potential, Potential, PotentialSplit};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Sign of the spectral parameter, `Plus` for λ⁴ + i0 and `Minus` for λ⁴ − i0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}
