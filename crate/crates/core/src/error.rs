use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate potential: ‖V‖₁ = {v_l1:e}")]
    DegeneratePotential { v_l1: f64 },
    #[error("grid radius {grid_radius} is smaller than the support radius {support_radius}")]
    GridTooSmall { grid_radius: f64, support_radius: f64 },
    #[error("finite-difference step underflow at λ = {lambda:e}")]
    StepUnderflow { lambda: f64 },
    #[error("zero energy is not regular: σ_min = {sigma_min:e}, tolerance = {tolerance:e}")]
    NotRegular { sigma_min: f64, tolerance: f64 },
    #[error("singular system: condition number {condition:e}")]
    SingularSystem { condition: f64 },
    #[error("quadrature not converged: relative change {change:e}")]
    QuadratureNotConverged { change: f64 },
    #[error("truncation sequence is not Cauchy: fitted slope {slope}")]
    NotCauchy { slope: f64 },
    #[error("envelope violated: growth factor {growth}")]
    EnvelopeViolated { growth: f64 },
    #[error("symbol class violated: {0}")]
    SymbolClassViolated(String),
    #[error("iterative solver stalled after {iterations} steps: residual {residual:e}")]
    SolverNotConverged { iterations: usize, residual: f64 },
    #[error("λ-ladder reaches {max_lambda} beyond the validity radius λ₀ = {lambda0}")]
    LadderOutsideValidity { max_lambda: f64, lambda0: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
