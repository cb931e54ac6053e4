//! Stationary representation of W₊ split into low- and high-energy parts,
//! the A₀,₀ oscillatory integral and the singular kernel Ã.

pub mod a00;
pub mod apply;
pub mod cutoff;
pub mod high;
pub mod low;

pub use a00::{
    a00_decomposed, a00_direct, a00_kernel, a_zw, tilde_a, tilde_a_apply, A00Decomposition, A00Evaluator, A00Kernel, TildeAReport,
};
pub use apply::{
    free_resolvent_apply, intertwining_check, perturbed_resolvent_apply, w_minus_from_w_plus, wave_kernel_matrix, IntertwiningReport,
    RadialFunction, WaveOperator, WavePart,
};
pub use cutoff::SpectralCutoff;
pub use high::{
    exponential_piece, exponential_piece_check, CauchyReport, ExponentialPieceReport, HighEnergyKernels, ProductKernel, PsiHatReport,
    UniformKernel,
};
pub use low::{KernelValue, LowEnergyKernels, LowTerm};
