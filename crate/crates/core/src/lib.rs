//! Quantum multi-baker maps and their mean square displacement.
//!
//! The crate builds the single-cell quantum baker map and other local
//! unitaries ([`baker`]), the full propagator on a ring of cells ([`chain`]),
//! evaluates the equilibrium m.s.d. exactly from the spectrum of the local
//! unitary ([`spectral`]), compares it with circular-ensemble predictions
//! ([`rmt`]) and with the classical multi-baker random walk ([`classical`]).

pub mod baker;
pub mod chain;
pub mod classical;
pub mod error;
pub mod linalg;
pub mod rmt;
pub mod series;
pub mod spectral;

pub use baker::{
    exchange_unitary, fourier_kernel, identity_unitary, quantum_baker, velocity_block,
    LocalUnitary, QuantizationPhases, UnitaryKind, VelocityBlock,
};
pub use chain::{build_chain, chain_autocorrelation, chain_msd, ChainOperator, CoarseObservables};
pub use classical::{classical_msd, classical_step, ClassicalEnsemble, ClassicalPoint};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use rmt::{
    cue_phase_average, mean_jj, mean_offdiag, msd_closed_form, msd_monte_carlo, sample_unitary,
    Ensemble, EnsembleSpec,
};
pub use series::{MsdSeries, SeriesSource};
pub use spectral::{
    autocorrelation, ballistic_coefficient, crossover_time, decompose, msd_exact, plateau_value,
    SpectralData, DEFAULT_DEGENERACY_TOL,
};
