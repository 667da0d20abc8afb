//! Two-detector correlation `C_αβ` and disorder ensembles of it.
//!
//! The input state occupies incident channels `0..k`; detectors sit on
//! transmitted channels `α ≠ β`. With `u_m = t_{αm}` and `w_p = t_{βp}`,
//!
//! ```text
//! C_αβ = Σ u*_m w*_p w_q u_n ⟨a†_m a†_p a_q a_n⟩
//!        / ( Σ u*_m u_n ⟨a†_m a_n⟩ · Σ w*_p w_q ⟨a†_p a_q⟩ ) − 1
//! ```

use rayon::prelude::*;
use thiserror::Error;

use crate::dmpk::{DmpkConfig, DmpkError, DmpkSampler};
use crate::haar::sample_haar;
use crate::rng;
use crate::scattering::{ScatteringError, TransmissionBlock};
use crate::state::{InputState, MomentTable, StateError};
use crate::C64;

/// Realizations generated from one Markov chain. Fixed so the output does
/// not depend on the worker count.
pub const BLOCK_SIZE: usize = 500;

/// Largest tolerated `|Im|` of the correlation ratio.
const IMAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("detectors must be distinct (both at {0})")]
    SameDetector(usize),
    #[error("detector {index} outside the {outputs} transmitted channels")]
    DetectorOutOfRange { index: usize, outputs: usize },
    #[error("state needs {modes} incident channels, block has {inputs}")]
    TooFewInputs { modes: usize, inputs: usize },
    #[error("output mode {0} receives no light; correlation undefined")]
    DarkOutput(usize),
    #[error("correlation ratio has imaginary part {0:e}")]
    ComplexResidue(f64),
    #[error("state carries no photons")]
    ZeroMeanPhoton,
    #[error("need at least 2 channels and one per input mode, got N = {channels} for {modes} modes")]
    TooFewChannels { channels: usize, modes: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Dmpk(#[from] DmpkError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error("could not start worker pool: {0}")]
    Workers(String),
}

/// Evaluates `C_αβ` for one state over many transmission blocks.
#[derive(Debug, Clone)]
pub struct Correlator {
    table: MomentTable,
}

impl Correlator {
    pub fn new(state: &InputState) -> Result<Self, CorrelationError> {
        let table = state.moment_table()?;
        if !(table.mean_photon() > 0.0) {
            return Err(CorrelationError::ZeroMeanPhoton);
        }
        Ok(Self { table })
    }

    pub fn modes(&self) -> usize {
        self.table.modes()
    }

    pub fn table(&self) -> &MomentTable {
        &self.table
    }

    pub fn evaluate(&self, t: &TransmissionBlock, alpha: usize, beta: usize) -> Result<f64, CorrelationError> {
        let k = self.table.modes();
        if alpha == beta {
            return Err(CorrelationError::SameDetector(alpha));
        }
        for index in [alpha, beta] {
            if index >= t.outputs() {
                return Err(CorrelationError::DetectorOutOfRange { index, outputs: t.outputs() });
            }
        }
        if t.inputs() < k {
            return Err(CorrelationError::TooFewInputs { modes: k, inputs: t.inputs() });
        }
        let u: Vec<C64> = (0..k).map(|m| t.amplitude(alpha, m)).collect();
        let w: Vec<C64> = (0..k).map(|p| t.amplitude(beta, p)).collect();

        let n_bar = self.table.mean_photon();
        let dark = 1e-14 * n_bar * n_bar;
        let ia = self.table.output_intensity(&u).re;
        if !(ia > dark) {
            return Err(CorrelationError::DarkOutput(alpha));
        }
        let ib = self.table.output_intensity(&w).re;
        if !(ib > dark) {
            return Err(CorrelationError::DarkOutput(beta));
        }
        let ratio = self.table.output_coincidence(&u, &w) / (ia * ib);
        if ratio.im.abs() > IMAG_TOLERANCE * ratio.re.abs().max(1.0) {
            return Err(CorrelationError::ComplexResidue(ratio.im));
        }
        Ok(ratio.re - 1.0)
    }

    /// Mean of `C_αβ` over all detector pairs `α < β` that receive light.
    pub fn evaluate_all_pairs(&self, t: &TransmissionBlock) -> Result<f64, CorrelationError> {
        let n = t.outputs();
        let mut sum = 0.0;
        let mut count = 0usize;
        for a in 0..n {
            for b in a + 1..n {
                match self.evaluate(t, a, b) {
                    Ok(c) => {
                        sum += c;
                        count += 1;
                    }
                    Err(CorrelationError::DarkOutput(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        if count == 0 {
            return Err(CorrelationError::DarkOutput(0));
        }
        Ok(sum / count as f64)
    }
}

/// One-off evaluation of `C_αβ`.
pub fn correlation(
    t: &TransmissionBlock,
    state: &InputState,
    alpha: usize,
    beta: usize,
) -> Result<f64, CorrelationError> {
    Correlator::new(state)?.evaluate(t, alpha, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorChoice {
    /// A fixed detector pair (0-based transmitted channel indices).
    Pair(usize, usize),
    /// Average over every distinct pair per realization.
    AllPairs,
}

impl Default for DetectorChoice {
    fn default() -> Self {
        Self::Pair(0, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSample {
    pub value: f64,
    pub realization: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    /// Chain parameters. Its `seed` is ignored: every block of realizations
    /// runs its own chain keyed by [`EnsembleConfig::seed`].
    pub dmpk: DmpkConfig,
    pub state: InputState,
    pub samples: usize,
    pub detectors: DetectorChoice,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl EnsembleConfig {
    pub fn new(state: InputState, channels: usize, disorder: f64, samples: usize, seed: u64) -> Self {
        Self {
            dmpk: DmpkConfig::new(channels, disorder, seed),
            state,
            samples,
            detectors: DetectorChoice::default(),
            seed,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub samples: Vec<CorrelationSample>,
    /// Realizations dropped because a detector was dark.
    pub excluded: usize,
}

impl EnsembleRun {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }
}

/// Draw `samples` disorder realizations and evaluate `C_αβ` on each.
///
/// Realizations are grouped into blocks of [`BLOCK_SIZE`]; each block warms
/// up its own DMPK chain and draws Haar unitaries from a separate stream.
/// Every stream is keyed by `(seed, block)`, so the output is identical for
/// any worker count.
pub fn ensemble_run(config: &EnsembleConfig) -> Result<EnsembleRun, CorrelationError> {
    let k = config.state.modes();
    let n = config.dmpk.channels;
    if n < 2 || n < k {
        return Err(CorrelationError::TooFewChannels { channels: n, modes: k });
    }
    if let DetectorChoice::Pair(a, b) = config.detectors {
        if a == b {
            return Err(CorrelationError::SameDetector(a));
        }
        for index in [a, b] {
            if index >= n {
                return Err(CorrelationError::DetectorOutOfRange { index, outputs: n });
            }
        }
    }
    config.dmpk.validate()?;
    let correlator = Correlator::new(&config.state)?;
    if config.samples == 0 {
        return Ok(EnsembleRun { samples: Vec::new(), excluded: 0 });
    }

    let blocks = config.samples.div_ceil(BLOCK_SIZE);
    let run_blocks = || -> Result<Vec<EnsembleRun>, CorrelationError> {
        (0..blocks).into_par_iter().map(|b| run_block(config, &correlator, b)).collect()
    };
    let parts = if config.workers == 0 {
        run_blocks()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CorrelationError::Workers(e.to_string()))?
            .install(run_blocks)?
    };

    let mut merged = EnsembleRun { samples: Vec::with_capacity(config.samples), excluded: 0 };
    for part in parts {
        merged.samples.extend(part.samples);
        merged.excluded += part.excluded;
    }
    Ok(merged)
}

fn run_block(config: &EnsembleConfig, correlator: &Correlator, block: usize) -> Result<EnsembleRun, CorrelationError> {
    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(config.samples);
    let n = config.dmpk.channels;

    let chain_rng = rng::stream(config.seed, 2 * block as u64);
    let mut unitary_rng = rng::stream(config.seed, 2 * block as u64 + 1);
    let mut sampler = DmpkSampler::with_rng(config.dmpk.clone(), chain_rng)?;
    sampler.warm_up();

    let mut out = EnsembleRun { samples: Vec::with_capacity(end - start), excluded: 0 };
    for realization in start..end {
        let spectrum = sampler.next_spectrum();
        let u = sample_haar(n, &mut unitary_rng);
        let v = sample_haar(n, &mut unitary_rng);
        let t = TransmissionBlock::from_decomposition(&u, &v, &spectrum)?;
        let value = match config.detectors {
            DetectorChoice::Pair(a, b) => correlator.evaluate(&t, a, b),
            DetectorChoice::AllPairs => correlator.evaluate_all_pairs(&t),
        };
        match value {
            Ok(value) => out.samples.push(CorrelationSample { value, realization }),
            Err(CorrelationError::DarkOutput(_)) => out.excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
