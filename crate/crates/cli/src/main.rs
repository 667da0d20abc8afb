use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use speckle_core::dmpk::{config_sidecar, run_sampler, write_spectra_csv};
use speckle_core::experiment::VERSION;
use speckle_core::{
    assemble, rng, run_experiment, sample_haar, transmission_block, verify_constants, DmpkConfig, DmpkSampler,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "speckle", version = VERSION, about = "Photon-number correlations of light scattered by a disordered medium")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a disorder sweep and write histograms, summary, sweep table and manifest.
    Run(RunArgs),
    /// Check the single-mode correlation constants on random transmission blocks.
    Verify {
        #[arg(long, default_value_t = 2020)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
    },
    /// Dump DMPK transmission eigenvalues as CSV with a TOML sidecar.
    Spectra {
        #[arg(long, default_value_t = 20)]
        channels: usize,
        #[arg(long)]
        disorder: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 2020)]
        seed: u64,
        /// CSV path; the sidecar is written next to it with a `.toml` extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump one transmission block `t` as CSV (`re1,im1,…` per row).
    Tblock {
        #[arg(long, default_value_t = 20)]
        channels: usize,
        #[arg(long)]
        disorder: f64,
        #[arg(long, default_value_t = 2020)]
        seed: u64,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    channels: Option<usize>,
    /// Comma-separated disorder strengths s = L/l.
    #[arg(long, value_delimiter = ',')]
    disorder: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lift the desk-scale sample cap; defaults to 10⁷ samples per s.
    #[arg(long)]
    paper_scale: bool,
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.paper_scale {
            let explicit = config.paper_scale || self.samples.is_some();
            let samples = config.samples;
            config = config.into_paper_scale();
            if explicit {
                config.samples = samples;
            }
        }
        if let Some(v) = self.state {
            config.state = v;
        }
        if let Some(v) = self.channels {
            config.channels = v;
        }
        if let Some(v) = self.disorder {
            config.disorder = v;
        }
        if let Some(v) = self.samples {
            config.samples = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if let Some(v) = self.bins {
            config.histogram.bins = v;
        }
        if let Some(v) = self.out {
            config.output = v;
        }
        Ok(config)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let manifest = run_experiment(&config)?;
    let manifest_path = config.output.join("manifest.toml");
    println!("state {}  N = {}  samples/s = {}  seed = {}", config.state, config.channels, config.samples, config.seed);
    println!("{:>6} {:>8} {:>9} {:>10} {:>8} {:>8}", "s", "count", "excluded", "mean", "dev_pos", "dev_neg");
    for r in &manifest.runs {
        println!(
            "{:>6} {:>8} {:>9} {:>10.4} {:>8.4} {:>8.4}",
            r.disorder, r.count, r.excluded, r.mean, r.dev_pos, r.dev_neg
        );
    }
    println!("wrote {} ({:.1}s)", manifest_path.display(), manifest.wall_clock_seconds);
    Ok(())
}

fn spectra(channels: usize, disorder: f64, count: usize, seed: u64, out: PathBuf) -> Result<()> {
    let config = DmpkConfig::new(channels, disorder, seed);
    let spectra = run_sampler(&config, count)?;
    let file = fs::File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_spectra_csv(&mut w, channels, &spectra)?;
    w.flush()?;
    let sidecar = out.with_extension("toml");
    fs::write(&sidecar, config_sidecar(&config)).with_context(|| format!("cannot write {}", sidecar.display()))?;
    Ok(())
}

fn tblock(channels: usize, disorder: f64, seed: u64, out: Option<PathBuf>) -> Result<()> {
    if channels == 0 {
        bail!("channels must be at least 1");
    }
    let mut sampler = DmpkSampler::new(DmpkConfig::new(channels, disorder, seed))?;
    sampler.warm_up();
    let spectrum = sampler.next_spectrum();
    let mut unitary_rng = rng::stream(seed, 1);
    let u = sample_haar(channels, &mut unitary_rng);
    let v = sample_haar(channels, &mut unitary_rng);
    let t = transmission_block(&assemble(&u, &v, &spectrum)?);
    match out {
        Some(path) => {
            let file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            t.write_csv(&mut w)?;
            w.flush()?;
        }
        None => t.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify { seed, realizations } => {
            let report = verify_constants(seed, realizations);
            print!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(anyhow::anyhow!("constant checks failed"))
            }
        }
        Command::Spectra { channels, disorder, count, seed, out } => spectra(channels, disorder, count, seed, out),
        Command::Tblock { channels, disorder, seed, out } => tblock(channels, disorder, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
