//! Verification machinery: Schur tests, bound envelopes, decay fits, the
//! oscillatory and weighted-L² probes, the Hilbert-transform suite and the
//! free dispersive decay.

pub mod dispersive;
pub mod envelope;
pub mod hilbert;
pub mod probes;
pub mod schur;

pub use dispersive::{free_dispersive_decay, free_evolution_kernel, free_evolve, free_unitarity_check, DispersiveReport, UnitarityReport};
pub use envelope::{envelope_constant, envelope_fit, BoundEnvelope, BracketSign, DecayFit, EnvelopeFit};
pub use hilbert::{truncated_hilbert_suite, GaussianSum, HilbertReport, LineGrid};
pub use probes::{
    o2_certificate, oscillatory_decay_probe, weighted_l2_row, weighted_l2_sweep, L2RowSweep, OscillatoryProbe, SymbolCertificate,
};
pub use schur::{schur_test, KernelSamples, SchurReport};
