//! Disorder sweeps driven by a declarative config, written to data files.
//!
//! A run produces, in the output directory:
//!
//! - `hist_s<s>.csv` per disorder value (`bin_center,density`)
//! - `summary.csv` (`state,N,s,count,excluded,mean,dev_pos,dev_neg,seed`)
//! - `sweep.csv` (`s,mean,std_error,dev_pos,dev_neg`)
//! - `manifest.toml` with the resolved config, file list and timings

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlation::{ensemble_run, CorrelationError, DetectorChoice, EnsembleConfig};
use crate::dmpk::{DmpkConfig, DmpkSampler};
use crate::haar::sample_haar;
use crate::rng;
use crate::scattering::TransmissionBlock;
use crate::state::{InputState, Squeezing, StateParseError};
use crate::stats::{histogram, summarize, StatsError};
use crate::{Correlator, C64};

/// Samples per disorder value allowed without `paper_scale`.
pub const DESK_SAMPLE_CAP: usize = 100_000;
pub const PAPER_SCALE_SAMPLES: usize = 10_000_000;
pub const PAPER_SCALE_WARMUP: usize = 100_000;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Parse(#[from] StateParseError),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("at s = {disorder}: {source}")]
    Ensemble { disorder: f64, source: CorrelationError },
    #[error("at s = {disorder}: {source}")]
    Stats { disorder: f64, source: StatsError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSection {
    pub bins: usize,
    /// Defaults to `[-1, 1]`, or `[-1, 6]` for squeezed input.
    pub range: Option<[f64; 2]>,
}

impl Default for HistogramSection {
    fn default() -> Self {
        Self { bins: 50, range: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmpkSection {
    pub warmup_sweeps: usize,
    pub record_stride: usize,
    /// Defaults to `s/N`.
    pub bin_width: Option<f64>,
}

impl Default for DmpkSection {
    fn default() -> Self {
        Self {
            warmup_sweeps: DmpkConfig::DEFAULT_WARMUP_SWEEPS,
            record_stride: DmpkConfig::DEFAULT_RECORD_STRIDE,
            bin_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// State in the command-line grammar, e.g. `fock:1,1`.
    pub state: String,
    pub channels: usize,
    pub disorder: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// 0 = all available cores.
    pub workers: usize,
    /// 1-based transmitted channels watched by the two detectors.
    pub detectors: [usize; 2],
    /// Average over all detector pairs in each realization instead.
    pub all_pairs: bool,
    pub output: PathBuf,
    /// Lift [`DESK_SAMPLE_CAP`].
    pub paper_scale: bool,
    pub histogram: HistogramSection,
    pub dmpk: DmpkSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            state: "fock:1,1".into(),
            channels: 20,
            disorder: vec![1.0, 4.0, 9.0, 20.0],
            samples: 10_000,
            seed: 2020,
            workers: 0,
            detectors: [1, 2],
            all_pairs: false,
            output: PathBuf::from("out"),
            paper_scale: false,
            histogram: HistogramSection::default(),
            dmpk: DmpkSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("ExperimentConfig serializes to TOML")
    }

    /// Switch to the long-run settings: uncapped, 10⁷ samples, 10⁵ warm-up sweeps.
    pub fn into_paper_scale(mut self) -> Self {
        self.paper_scale = true;
        self.samples = PAPER_SCALE_SAMPLES;
        self.dmpk.warmup_sweeps = PAPER_SCALE_WARMUP;
        self
    }

    pub fn parsed_state(&self) -> Result<InputState, ExperimentError> {
        Ok(self.state.parse()?)
    }

    pub fn histogram_range(&self, state: &InputState) -> (f64, f64) {
        match (self.histogram.range, state) {
            (Some([lo, hi]), _) => (lo, hi),
            (None, InputState::SqueezedVacuumProduct(_)) => (-1.0, 6.0),
            (None, _) => (-1.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<InputState, ExperimentError> {
        let state = self.parsed_state()?;
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.disorder.is_empty() {
            return bad("disorder list is empty".into());
        }
        if let Some(s) = self.disorder.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("disorder values must be positive, got {s}"));
        }
        if self.channels < 2 || self.channels < state.modes() {
            return bad(format!(
                "channels = {} must be at least 2 and at least the {} input modes",
                self.channels,
                state.modes()
            ));
        }
        if !self.paper_scale && self.samples > DESK_SAMPLE_CAP {
            return bad(format!(
                "{} samples exceeds the desk-scale cap of {DESK_SAMPLE_CAP}; enable paper_scale to lift it",
                self.samples
            ));
        }
        let [a, b] = self.detectors;
        if !self.all_pairs && (a == 0 || b == 0 || a == b || a > self.channels || b > self.channels) {
            return bad(format!("detectors must be distinct channels in 1..={}, got {a},{b}", self.channels));
        }
        if self.histogram.bins == 0 {
            return bad("histogram.bins must be at least 1".into());
        }
        let (lo, hi) = self.histogram_range(&state);
        if !(hi > lo) {
            return bad(format!("histogram.range [{lo}, {hi}] is empty"));
        }
        if self.dmpk.record_stride == 0 {
            return bad("dmpk.record_stride must be at least 1".into());
        }
        Ok(state)
    }

    pub fn ensemble_config(&self, state: &InputState, index: usize) -> EnsembleConfig {
        let disorder = self.disorder[index];
        let seed = rng::mix(self.seed, index as u64);
        let mut dmpk = DmpkConfig::new(self.channels, disorder, seed);
        dmpk.warmup_sweeps = self.dmpk.warmup_sweeps;
        dmpk.record_stride = self.dmpk.record_stride;
        if let Some(dx) = self.dmpk.bin_width {
            dmpk.bin_width = dx;
        }
        EnsembleConfig {
            dmpk,
            state: state.clone(),
            samples: self.samples,
            detectors: if self.all_pairs {
                DetectorChoice::AllPairs
            } else {
                DetectorChoice::Pair(self.detectors[0] - 1, self.detectors[1] - 1)
            },
            seed,
            workers: self.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRecord {
    pub disorder: f64,
    pub histogram: PathBuf,
    pub count: usize,
    pub excluded: usize,
    pub outside_histogram: usize,
    pub mean: f64,
    pub std_error: f64,
    pub dev_pos: f64,
    pub dev_neg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub summary: PathBuf,
    pub sweep: PathBuf,
    pub runs: Vec<DisorderRecord>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn files(&self) -> Vec<&Path> {
        let mut files = vec![self.summary.as_path(), self.sweep.as_path()];
        files.extend(self.runs.iter().map(|r| r.histogram.as_path()));
        files
    }
}

fn hist_file_name(disorder: f64) -> String {
    format!("hist_s{disorder}.csv")
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents).map_err(io_err(path))
}

/// Run every disorder value of `config` and write the data files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest, ExperimentError> {
    let started = Instant::now();
    let state = config.validate()?;
    let out = &config.output;
    fs::create_dir_all(out).map_err(io_err(out))?;

    let mut runs = Vec::with_capacity(config.disorder.len());
    let mut summary_csv = String::from("state,N,s,count,excluded,mean,dev_pos,dev_neg,seed\n");
    let mut sweep_csv = String::from("s,mean,std_error,dev_pos,dev_neg\n");
    let range = config.histogram_range(&state);

    for (index, &disorder) in config.disorder.iter().enumerate() {
        let ensemble = ensemble_run(&config.ensemble_config(&state, index))
            .map_err(|source| ExperimentError::Ensemble { disorder, source })?;
        let values = ensemble.values();
        let summary = summarize(&values).map_err(|source| ExperimentError::Stats { disorder, source })?;
        let hist = histogram(&values, config.histogram.bins, range)
            .map_err(|source| ExperimentError::Stats { disorder, source })?;

        let hist_path = out.join(hist_file_name(disorder));
        let mut buf = Vec::new();
        hist.write_csv(&mut buf).map_err(io_err(&hist_path))?;
        write_file(&hist_path, &buf)?;

        summary_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_quote(&state.to_string()),
            config.channels,
            disorder,
            summary.count,
            ensemble.excluded,
            summary.mean,
            summary.dev_pos,
            summary.dev_neg,
            config.seed
        ));
        sweep_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            disorder,
            summary.mean,
            summary.std_error(),
            summary.dev_pos,
            summary.dev_neg
        ));
        runs.push(DisorderRecord {
            disorder,
            histogram: hist_path,
            count: summary.count,
            excluded: ensemble.excluded,
            outside_histogram: hist.outside,
            mean: summary.mean,
            std_error: summary.std_error(),
            dev_pos: summary.dev_pos,
            dev_neg: summary.dev_neg,
        });
    }

    let summary = out.join("summary.csv");
    write_file(&summary, summary_csv.as_bytes())?;
    let sweep = out.join("sweep.csv");
    write_file(&sweep, sweep_csv.as_bytes())?;

    let manifest = RunManifest {
        version: VERSION.to_string(),
        config: config.clone(),
        summary,
        sweep,
        runs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = out.join("manifest.toml");
    let text = toml::to_string(&manifest).expect("manifest serializes to TOML");
    write_file(&manifest_path, text.as_bytes())?;

    for file in manifest.files() {
        let len = fs::metadata(file).map_err(io_err(file))?.len();
        if len == 0 {
            return Err(ExperimentError::Config(format!("output {} is empty", file.display())));
        }
    }
    Ok(manifest)
}

/// One row of [`verify_constants`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCheck {
    pub name: String,
    pub expected: f64,
    /// Largest `|C_αβ − expected|` over the tested blocks (for the identity
    /// row, largest `|C_αβ − C_single-mode|`).
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub realizations: usize,
    pub rows: Vec<ConstantCheck>,
}

impl ConstantsReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

impl fmt::Display for ConstantsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "single-mode constants over {} random transmission blocks", self.realizations)?;
        for row in &self.rows {
            writeln!(
                f,
                "{} {:<34} expected {:>8.4}  max deviation {:.3e} (tol {:.0e})",
                if row.passed { "PASS" } else { "FAIL" },
                row.name,
                row.expected,
                row.max_deviation,
                row.tolerance
            )?;
        }
        Ok(())
    }
}

/// Random transmission blocks from the full pipeline (DMPK spectrum plus
/// Haar unitaries), `N = 20`, disorder cycling through 1, 4, 9, 20.
pub fn random_blocks(seed: u64, count: usize) -> Vec<TransmissionBlock> {
    const CHANNELS: usize = 20;
    let disorders = [1.0, 4.0, 9.0, 20.0];
    let mut samplers: Vec<DmpkSampler> = disorders
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut config = DmpkConfig::new(CHANNELS, s, seed);
            config.warmup_sweeps = 2_000;
            let mut sampler =
                DmpkSampler::with_rng(config, rng::stream(seed, 2 * i as u64)).expect("fixed DMPK config is valid");
            sampler.warm_up();
            sampler
        })
        .collect();
    let mut unitary_rng = rng::stream(seed, 1_000);
    (0..count)
        .map(|i| {
            let spectrum = samplers[i % disorders.len()].next_spectrum();
            let u = sample_haar(CHANNELS, &mut unitary_rng);
            let v = sample_haar(CHANNELS, &mut unitary_rng);
            TransmissionBlock::from_decomposition(&u, &v, &spectrum).expect("matching dimensions")
        })
        .collect()
}

/// Check the single-mode constants of every input family, and the identity
/// between `C_αβ` and the input's own second-order correlation, on
/// `realizations` random blocks.
pub fn verify_constants(seed: u64, realizations: usize) -> ConstantsReport {
    let blocks = random_blocks(seed, realizations);
    let squeezed = |n: f64| InputState::squeezed_vacuum(&[Squeezing::with_mean_photon(n, 0.3)]);
    let cases: Vec<(String, InputState, f64)> = vec![
        ("coherent".into(), InputState::coherent(&[C64::new(1.3, 0.4)]), 0.0),
        ("thermal, n=2".into(), InputState::thermal(&[2.0]), 1.0),
        ("squeezed vacuum, n=1 (2 + 1/n)".into(), squeezed(1.0), 3.0),
        ("squeezed vacuum, n=2 (2 + 1/n)".into(), squeezed(2.0), 2.5),
        ("Fock |1> (-1/n)".into(), InputState::fock(&[1]), -1.0),
        ("Fock |2> (-1/n)".into(), InputState::fock(&[2]), -0.5),
        ("Fock |4> (-1/n)".into(), InputState::fock(&[4]), -0.25),
    ];

    let mut rows = Vec::new();
    let mut identity_dev: f64 = 0.0;
    let mut identity_ok = true;
    for (name, state, expected) in &cases {
        let correlator = Correlator::new(state).expect("constant states are valid");
        let single = state.second_order_correlation().expect("single-mode state");
        let mut max_dev: f64 = 0.0;
        let mut ok = true;
        for (i, t) in blocks.iter().enumerate() {
            let (a, b) = (i % 19, 19 - i % 19);
            match correlator.evaluate(t, a.min(b), a.max(b)) {
                Ok(c) => {
                    max_dev = max_dev.max((c - expected).abs());
                    identity_dev = identity_dev.max((c - single).abs());
                }
                Err(_) => ok = false,
            }
        }
        let tolerance = 1e-9;
        rows.push(ConstantCheck {
            name: name.clone(),
            expected: *expected,
            max_deviation: max_dev,
            tolerance,
            passed: ok && max_dev < tolerance,
        });
        identity_ok &= ok;
    }
    let tolerance = 1e-10;
    rows.push(ConstantCheck {
        name: "C_ab equals input second-order C".into(),
        expected: 0.0,
        max_deviation: identity_dev,
        tolerance,
        passed: identity_ok && identity_dev < tolerance,
    });
    ConstantsReport { realizations, rows }
}
