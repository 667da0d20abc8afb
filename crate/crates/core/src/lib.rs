//! Photon-number correlations of quantized light after multiple scattering
//! in a disordered medium.
//!
//! The pipeline has three stages:
//!
//! 1. [`dmpk`] samples transmission eigenvalues `T_i = 1/cosh² x_i` from the
//!    DMPK Gibbs distribution with a Metropolis chain over the `x_i`.
//! 2. [`haar`] and [`scattering`] dress the eigenvalues with Haar-random
//!    unitaries into a symmetric `2N × 2N` scattering matrix and expose its
//!    transmission block `t`.
//! 3. [`state`] provides normally ordered moments of the input light and
//!    [`correlation`] turns `(t, state)` into the two-detector correlation
//!    `C_αβ = ⟨:n_α n_β:⟩ / (⟨n_α⟩⟨n_β⟩) − 1`, aggregated by [`stats`].
//!
//! [`oracle`] is a dense truncated-Fock-space engine used as an independent
//! reference for the analytic moment code, and [`experiment`] runs whole
//! disorder sweeps and writes their data files.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod correlation;
pub mod dmpk;
pub mod experiment;
pub mod haar;
pub mod oracle;
pub mod rng;
pub mod scattering;
pub mod state;
pub mod stats;

pub use nalgebra::Complex;

/// Double precision complex scalar used throughout.
pub type C64 = Complex<f64>;

pub use correlation::{
    correlation, ensemble_run, CorrelationError, CorrelationSample, Correlator, DetectorChoice, EnsembleConfig,
    EnsembleRun,
};
pub use dmpk::{DmpkConfig, DmpkError, DmpkSampler, ParticleChain, TransmissionSpectrum};
pub use experiment::{
    run_experiment, verify_constants, ConstantsReport, ExperimentConfig, ExperimentError, RunManifest,
};
pub use haar::{sample_haar, UnitaryMatrix};
pub use scattering::{assemble, transmission_block, ScatteringError, ScatteringMatrix, TransmissionBlock};
pub use state::{InputState, MomentTable, Squeezing, StateError, StateParseError};
pub use stats::{histogram, summarize, EnsembleSummary, Histogram, StatsError};
