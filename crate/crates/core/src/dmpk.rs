//! Transmission eigenvalues from the DMPK Gibbs distribution.
//!
//! With `T_i = 1/cosh² x_i`, the joint density of the `x_i` for a wire of
//! `N` channels and disorder `s = L/l` is `exp(−β H)` where
//!
//! ```text
//! H = Σ_{i<j} U(x_i, x_j) + Σ_j V(x_j)
//! U(a, b) = −½ (ln|sinh² a − sinh² b| + ln|a² − b²|)
//! V(x)    = γ/(2βs) x² − 1/(2β) ln|x sinh 2x|,    γ = β(N − 1) + 2
//! ```
//!
//! The `x_i` are treated as an ordered chain of particles and sampled with
//! single-particle Metropolis moves whose proposal lies strictly between the
//! neighbours, so the ordering never changes.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, StreamRng};

/// Sweeps between full energy recomputations inside [`DmpkSampler`].
const ENERGY_REFRESH_SWEEPS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DmpkError {
    #[error("invalid DMPK configuration: {0}")]
    InvalidConfig(String),
    #[error("coincident particle positions at x = {0} (divergent repulsion)")]
    Coincident(f64),
    #[error("position x = {0} outside the domain x > 0")]
    Domain(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpkConfig {
    /// Number of transmission channels `N`.
    pub channels: usize,
    /// Disorder strength `s = L/l`.
    pub disorder: f64,
    /// Symmetry index. Only the time-reversal class `β = 1` is supported.
    pub beta: u32,
    /// Width `Δx` of the initial bins; particles start at the bin centres.
    pub bin_width: f64,
    pub warmup_sweeps: usize,
    /// Sweeps between consecutive recorded spectra.
    pub record_stride: usize,
    pub seed: u64,
}

impl DmpkConfig {
    pub const DEFAULT_WARMUP_SWEEPS: usize = 10_000;
    pub const DEFAULT_RECORD_STRIDE: usize = 10;

    /// Desk-scale defaults with `Δx = s/N`.
    pub fn new(channels: usize, disorder: f64, seed: u64) -> Self {
        Self {
            channels,
            disorder,
            beta: 1,
            bin_width: disorder / channels.max(1) as f64,
            warmup_sweeps: Self::DEFAULT_WARMUP_SWEEPS,
            record_stride: Self::DEFAULT_RECORD_STRIDE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DmpkError> {
        let fail = |msg: String| Err(DmpkError::InvalidConfig(msg));
        if self.channels == 0 {
            return fail("channels must be at least 1".into());
        }
        if !(self.disorder.is_finite() && self.disorder > 0.0) {
            return fail(format!("disorder must be positive, got {}", self.disorder));
        }
        if self.beta != 1 {
            return fail(format!("only beta = 1 is supported, got {}", self.beta));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return fail(format!("bin_width must be positive, got {}", self.bin_width));
        }
        if self.record_stride == 0 {
            return fail("record_stride must be at least 1".into());
        }
        Ok(())
    }

    /// `γ = β(N − 1) + 2`.
    pub fn gamma(&self) -> f64 {
        f64::from(self.beta) * (self.channels as f64 - 1.0) + 2.0
    }

    fn beta_f(&self) -> f64 {
        f64::from(self.beta)
    }
}

/// Interaction `U(x_i, x_j)`; symmetric, diverging to `+∞` as the points merge.
pub fn pair_potential(xi: f64, xj: f64) -> Result<f64, DmpkError> {
    if xi == xj {
        return Err(DmpkError::Coincident(xi));
    }
    Ok(pair_term(xi, sinh_sq(xi), xj, sinh_sq(xj)))
}

/// Confining potential `V(x)` for `x > 0`.
pub fn confining_potential(x: f64, config: &DmpkConfig) -> Result<f64, DmpkError> {
    if !(x > 0.0) {
        return Err(DmpkError::Domain(x));
    }
    Ok(confining_term(x, config))
}

/// Full `H` of a set of positions.
pub fn hamiltonian_energy(positions: &[f64], config: &DmpkConfig) -> Result<f64, DmpkError> {
    let mut energy = 0.0;
    for (i, &xi) in positions.iter().enumerate() {
        energy += confining_potential(xi, config)?;
        for &xj in &positions[i + 1..] {
            energy += pair_potential(xi, xj)?;
        }
    }
    Ok(energy)
}

fn sinh_sq(x: f64) -> f64 {
    let s = x.sinh();
    s * s
}

fn pair_term(xi: f64, shi: f64, xj: f64, shj: f64) -> f64 {
    -0.5 * ((shi - shj).abs() * (xi * xi - xj * xj).abs()).ln()
}

fn confining_term(x: f64, config: &DmpkConfig) -> f64 {
    let beta = config.beta_f();
    config.gamma() / (2.0 * beta * config.disorder) * x * x - (x * (2.0 * x).sinh()).abs().ln() / (2.0 * beta)
}

/// Ordered particle positions `0 < x_1 < … < x_N` with the cached `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleChain {
    positions: Vec<f64>,
    sinh_sq: Vec<f64>,
    energy: f64,
}

impl ParticleChain {
    /// Particles at bin centres `x_i = (i − ½) Δx`.
    pub fn init(config: &DmpkConfig) -> Result<Self, DmpkError> {
        config.validate()?;
        let positions: Vec<f64> = (0..config.channels).map(|i| (i as f64 + 0.5) * config.bin_width).collect();
        Self::from_positions(positions, config)
    }

    pub fn from_positions(positions: Vec<f64>, config: &DmpkConfig) -> Result<Self, DmpkError> {
        config.validate()?;
        if positions.len() != config.channels {
            return Err(DmpkError::InvalidConfig(format!(
                "expected {} positions, got {}",
                config.channels,
                positions.len()
            )));
        }
        if let Some(w) = positions.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(DmpkError::InvalidConfig(format!(
                "positions must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let energy = hamiltonian_energy(&positions, config)?;
        let sinh_sq = positions.iter().map(|&x| sinh_sq(x)).collect();
        Ok(Self { positions, sinh_sq, energy })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Incrementally maintained energy.
    pub fn cached_energy(&self) -> f64 {
        self.energy
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Recompute `H` from scratch and replace the cached value.
    pub fn refresh_energy(&mut self, config: &DmpkConfig) {
        self.energy = hamiltonian_energy(&self.positions, config).expect("ordered positive chain has finite energy");
    }

    pub fn is_ordered(&self) -> bool {
        self.positions.first().is_some_and(|&x| x > 0.0) && self.positions.windows(2).all(|w| w[0] < w[1])
    }

    /// Energy terms of `H` that involve particle `i` placed at `x`.
    fn local_energy(&self, i: usize, x: f64, sh: f64, config: &DmpkConfig) -> f64 {
        let mut e = confining_term(x, config);
        for (j, (&xj, &shj)) in self.positions.iter().zip(&self.sinh_sq).enumerate() {
            if j != i {
                e += pair_term(x, sh, xj, shj);
            }
        }
        e
    }

    /// Convert to transmission eigenvalues.
    pub fn spectrum(&self) -> TransmissionSpectrum {
        sample_spectrum(self)
    }
}

/// Upper end of the proposal window of the outermost particle: its own
/// inner gap mirrored outward, or `Δx` beyond it for a single particle.
fn outer_bound(chain: &ParticleChain, x_last: f64, config: &DmpkConfig) -> f64 {
    let n = chain.positions.len();
    if n == 1 {
        x_last + config.bin_width
    } else {
        2.0 * x_last - chain.positions[n - 2]
    }
}

/// One sweep: `N` single-particle attempts, each on a uniformly chosen
/// particle. Returns the number of accepted moves.
///
/// Interior proposals are symmetric, so acceptance is plain Metropolis.
/// The outermost particle's window grows with its own position; its
/// acceptance carries the Hastings factor for that asymmetry.
pub fn metropolis_sweep<R: Rng + ?Sized>(chain: &mut ParticleChain, config: &DmpkConfig, rng: &mut R) -> usize {
    let n = chain.positions.len();
    let beta = config.beta_f();
    let mut accepted = 0;
    for _ in 0..n {
        let i = rng.random_range(0..n);
        let x_old = chain.positions[i];
        let lo = if i == 0 { 0.0 } else { chain.positions[i - 1] };
        let last = i == n - 1;
        let hi = if last { outer_bound(chain, x_old, config) } else { chain.positions[i + 1] };
        let x_new = lo + (hi - lo) * rng.random::<f64>();
        if !(x_new > lo && x_new < hi) {
            continue;
        }

        let mut log_proposal_ratio = 0.0;
        if last {
            let hi_back = outer_bound(chain, x_new, config);
            if x_old >= hi_back {
                continue;
            }
            log_proposal_ratio = ((hi - lo) / (hi_back - lo)).ln();
        }

        let sh_new = sinh_sq(x_new);
        let delta =
            chain.local_energy(i, x_new, sh_new, config) - chain.local_energy(i, x_old, chain.sinh_sq[i], config);
        let log_accept = -beta * delta + log_proposal_ratio;
        if log_accept >= 0.0 || rng.random::<f64>() < log_accept.exp() {
            chain.positions[i] = x_new;
            chain.sinh_sq[i] = sh_new;
            chain.energy += delta;
            accepted += 1;
        }
    }
    accepted
}

/// Transmission eigenvalues of one disorder realization, `T_i ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSpectrum {
    eigenvalues: Vec<f64>,
}

impl TransmissionSpectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Self {
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Dimensionless conductance `Σ T_i`.
    pub fn conductance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// `T = 1/cosh² x`, written as `(2e^{−x}/(1 + e^{−2x}))²` so large `x` does
/// not overflow.
pub fn transmission_of(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    let t = 2.0 * e / (1.0 + e * e);
    t * t
}

pub fn sample_spectrum(chain: &ParticleChain) -> TransmissionSpectrum {
    TransmissionSpectrum::new(chain.positions.iter().map(|&x| transmission_of(x)).collect())
}

/// A Metropolis chain with its own random stream.
#[derive(Debug, Clone)]
pub struct DmpkSampler {
    config: DmpkConfig,
    chain: ParticleChain,
    rng: StreamRng,
    sweeps: usize,
}

impl DmpkSampler {
    /// Chain seeded from `config.seed`.
    pub fn new(config: DmpkConfig) -> Result<Self, DmpkError> {
        let rng = rng::stream(config.seed, 0);
        Self::with_rng(config, rng)
    }

    pub fn with_rng(config: DmpkConfig, rng: StreamRng) -> Result<Self, DmpkError> {
        let chain = ParticleChain::init(&config)?;
        Ok(Self { config, chain, rng, sweeps: 0 })
    }

    pub fn config(&self) -> &DmpkConfig {
        &self.config
    }

    pub fn chain(&self) -> &ParticleChain {
        &self.chain
    }

    pub fn sweep(&mut self) -> usize {
        let accepted = metropolis_sweep(&mut self.chain, &self.config, &mut self.rng);
        self.sweeps += 1;
        if self.sweeps % ENERGY_REFRESH_SWEEPS == 0 {
            self.chain.refresh_energy(&self.config);
        }
        accepted
    }

    pub fn warm_up(&mut self) {
        for _ in 0..self.config.warmup_sweeps {
            self.sweep();
        }
    }

    /// Advance `record_stride` sweeps and read off the spectrum.
    pub fn next_spectrum(&mut self) -> TransmissionSpectrum {
        for _ in 0..self.config.record_stride {
            self.sweep();
        }
        self.chain.spectrum()
    }
}

/// Warm up, then record `count` spectra spaced `record_stride` sweeps apart.
pub fn run_sampler(config: &DmpkConfig, count: usize) -> Result<Vec<TransmissionSpectrum>, DmpkError> {
    let mut sampler = DmpkSampler::new(config.clone())?;
    if count == 0 {
        return Ok(Vec::new());
    }
    sampler.warm_up();
    Ok((0..count).map(|_| sampler.next_spectrum()).collect())
}

/// CSV with header `T1,…,TN` and one row per realization.
pub fn write_spectra_csv<W: Write>(mut out: W, channels: usize, spectra: &[TransmissionSpectrum]) -> io::Result<()> {
    let header: Vec<String> = (1..=channels).map(|i| format!("T{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for spectrum in spectra {
        let row: Vec<String> = spectrum.eigenvalues.iter().map(|t| t.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// TOML echo of the configuration (including the seed) written next to
/// exported spectra.
pub fn config_sidecar(config: &DmpkConfig) -> String {
    toml::to_string(config).expect("DmpkConfig serializes to TOML")
}
