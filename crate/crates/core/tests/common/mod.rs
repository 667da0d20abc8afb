//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use rand::Rng;
use speckle_core::dmpk::TransmissionSpectrum;
use speckle_core::rng::StreamRng;
use speckle_core::{sample_haar, InputState, Squeezing, TransmissionBlock, C64};

/// Random block with `n` channels: Haar unitaries around a uniform spectrum
/// bounded away from 0 so no output is dark.
pub fn random_block(rng: &mut StreamRng, n: usize) -> TransmissionBlock {
    let u = sample_haar(n, rng);
    let v = sample_haar(n, rng);
    let spectrum = TransmissionSpectrum::new((0..n).map(|_| rng.random_range(0.05..1.0)).collect());
    TransmissionBlock::from_decomposition(&u, &v, &spectrum).expect("square blocks")
}

fn random_phase(rng: &mut StreamRng) -> f64 {
    rng.random_range(0.0..std::f64::consts::TAU)
}

/// Random input state with at most three modes and at most three photons on
/// average per mode. Mode counts and means are kept small enough for the
/// dense oracle where the photon distribution has a long tail.
pub fn random_state(rng: &mut StreamRng, case: usize) -> InputState {
    match case % 5 {
        0 => {
            let k = rng.random_range(1..=3);
            loop {
                let occ: Vec<u32> = (0..k).map(|_| rng.random_range(0..=3)).collect();
                if occ.iter().sum::<u32>() > 0 {
                    return InputState::fock(&occ);
                }
            }
        }
        1 => {
            let k = rng.random_range(1..=3);
            // Only 4^k − 1 distinct nonzero occupations exist.
            let n_terms = rng.random_range(2..=4usize.min(4usize.pow(k as u32) - 1));
            let mut terms: Vec<(C64, Vec<u32>)> = Vec::new();
            while terms.len() < n_terms {
                let occ: Vec<u32> = (0..k).map(|_| rng.random_range(0..=3)).collect();
                if occ.iter().sum::<u32>() == 0 || terms.iter().any(|(_, o)| *o == occ) {
                    continue;
                }
                terms.push((C64::from_polar(rng.random_range(0.2..1.0), random_phase(rng)), occ));
            }
            let norm = terms.iter().map(|(c, _)| c.norm_sqr()).sum::<f64>().sqrt();
            for (c, _) in &mut terms {
                *c /= norm;
            }
            InputState::superposition(terms).expect("normalized distinct terms")
        }
        2 => {
            let k = rng.random_range(1..=3);
            let amps: Vec<C64> =
                (0..k).map(|_| C64::from_polar(rng.random_range(0.1f64..3.0).sqrt(), random_phase(rng))).collect();
            InputState::coherent(&amps)
        }
        3 => {
            let k = rng.random_range(1..=3);
            let max = if k == 3 { 1.0 } else { 3.0 };
            let means: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..max)).collect();
            InputState::thermal(&means)
        }
        _ => {
            let k = rng.random_range(1..=3);
            let max = if k == 3 { 0.5 } else { 3.0 };
            let params: Vec<Squeezing> =
                (0..k).map(|_| Squeezing::with_mean_photon(rng.random_range(0.1..max), random_phase(rng))).collect();
            InputState::squeezed_vacuum(&params)
        }
    }
}

/// Distinct detector pair among `n` outputs.
pub fn random_pair(rng: &mut StreamRng, n: usize) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let b = (a + rng.random_range(1..n)) % n;
    (a, b)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

use speckle_core::dmpk::{confining_potential, metropolis_sweep, pair_potential, ParticleChain};
use speckle_core::haar::unitarity_defect;
use speckle_core::{assemble, rng, DmpkConfig, DmpkSampler};

/// Worst unitarity and symmetry defects of full scattering matrices built
/// from DMPK spectra at `N = 20`.
pub fn scattering_defects(seed: u64, per_disorder: usize) -> (f64, f64) {
    let mut unitary_rng = rng::stream(seed, 1);
    let (mut unitarity, mut symmetry) = (0.0f64, 0.0f64);
    for (i, s) in [1.0, 4.0, 9.0, 20.0].into_iter().enumerate() {
        let mut config = DmpkConfig::new(20, s, seed);
        config.warmup_sweeps = 2_000;
        let mut sampler = DmpkSampler::with_rng(config, rng::stream(seed, 10 + i as u64)).unwrap();
        sampler.warm_up();
        for _ in 0..per_disorder {
            let spectrum = sampler.next_spectrum();
            let u = sample_haar(20, &mut unitary_rng);
            let v = sample_haar(20, &mut unitary_rng);
            let s = assemble(&u, &v, &spectrum).unwrap();
            unitarity = unitarity.max(unitarity_defect(s.matrix()));
            symmetry = symmetry.max(s.symmetry_defect());
        }
    }
    (unitarity, symmetry)
}

/// Largest KS distance between `|U_ij|²` of `n × n` Haar unitaries and its
/// exact law `Beta(1, n − 1)`, over every matrix position.
pub fn haar_ks(seed: u64, n: usize, draws: usize) -> f64 {
    let mut rng = rng::stream(seed, 0);
    let mut columns = vec![Vec::with_capacity(draws); n * n];
    for _ in 0..draws {
        let u = sample_haar(n, &mut rng);
        for (k, z) in u.matrix().iter().enumerate() {
            columns[k].push(z.norm_sqr());
        }
    }
    let cdf = |x: f64| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powi(n as i32 - 1);
    columns.iter_mut().map(|c| ks_distance(c, cdf)).fold(0.0, f64::max)
}

/// Worst ordering violations and relative energy drift of `N = 20` chains
/// run for `sweeps` sweeps without any energy refresh.
pub fn chain_invariants(seed: u64, sweeps: usize) -> (usize, f64) {
    let mut violations = 0;
    let mut drift = 0.0f64;
    for (i, s) in [1.0, 4.0, 9.0, 20.0].into_iter().enumerate() {
        let config = DmpkConfig::new(20, s, seed);
        let mut chain = ParticleChain::init(&config).unwrap();
        let mut rng = rng::stream(seed, 20 + i as u64);
        for _ in 0..sweeps {
            metropolis_sweep(&mut chain, &config, &mut rng);
            if !chain.is_ordered() {
                violations += 1;
            }
        }
        let cached = chain.cached_energy();
        let exact = speckle_core::dmpk::hamiltonian_energy(chain.positions(), &config).unwrap();
        drift = drift.max((cached - exact).abs() / exact.abs().max(1.0));
    }
    (violations, drift)
}

/// Total-variation distance between the binned `(x_1, x_2)` occupation of an
/// `N = 2` chain and a quadrature of `exp(−H)` on the same bins.
pub fn two_particle_tv(seed: u64, disorder: f64, sweeps: usize) -> f64 {
    const BINS: usize = 20;
    const SUB: usize = 8;
    let config = DmpkConfig::new(2, disorder, seed);
    // exp(−H) is below 1e−12 of its peak beyond this edge.
    let edge = {
        let mut x = 1.0;
        while log_weight(0.5 * x, x, &config) - log_weight(0.5, 1.0, &config) > -40.0 {
            x += 0.25;
        }
        x
    };
    let width = edge / BINS as f64;

    let mut chain = ParticleChain::init(&config).unwrap();
    let mut rng = rng::stream(seed, 0);
    for _ in 0..10_000 {
        metropolis_sweep(&mut chain, &config, &mut rng);
    }
    let mut counts = vec![0.0; BINS * BINS];
    let bin = |x: f64| ((x / width) as usize).min(BINS - 1);
    for _ in 0..sweeps {
        metropolis_sweep(&mut chain, &config, &mut rng);
        let p = chain.positions();
        counts[bin(p[0]) * BINS + bin(p[1])] += 1.0;
    }

    let mut weights = vec![0.0; BINS * BINS];
    let reference = log_weight(0.5, 1.0, &config);
    for (a, b) in (0..BINS).flat_map(|a| (a..BINS).map(move |b| (a, b))) {
        let mut w = 0.0;
        for (i, j) in (0..SUB).flat_map(|i| (0..SUB).map(move |j| (i, j))) {
            let x1 = (a as f64 + (i as f64 + 0.5) / SUB as f64) * width;
            let x2 = (b as f64 + (j as f64 + 0.5) / SUB as f64) * width;
            if x1 < x2 {
                w += (log_weight(x1, x2, &config) - reference).exp();
            }
        }
        weights[a * BINS + b] = w;
    }
    let (nc, nw) = (counts.iter().sum::<f64>(), weights.iter().sum::<f64>());
    0.5 * counts.iter().zip(&weights).map(|(c, w)| (c / nc - w / nw).abs()).sum::<f64>()
}

/// `−β H` for two particles at `x1 < x2`.
fn log_weight(x1: f64, x2: f64, config: &DmpkConfig) -> f64 {
    -(pair_potential(x1, x2).unwrap()
        + confining_potential(x1, config).unwrap()
        + confining_potential(x2, config).unwrap())
}
