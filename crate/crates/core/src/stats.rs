//! Ensemble summaries and normalized histograms.
//!
//! The one-sided "deviations" are conditional root-mean-square spreads about
//! the ensemble mean: `dev_pos` is the RMS of `C − C̄` over the samples with
//! `C > C̄`, `dev_neg` the same over `C < C̄`. An empty side gives 0.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("histogram range [{0}, {1}] is empty")]
    EmptyRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub mean: f64,
    pub dev_pos: f64,
    pub dev_neg: f64,
    /// Unbiased sample standard deviation.
    pub std_dev: f64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl EnsembleSummary {
    /// Standard error of the mean, ignoring autocorrelation.
    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.count as f64).sqrt()
    }
}

pub fn summarize(samples: &[f64]) -> Result<EnsembleSummary, StatsError> {
    let count = samples.len();
    if count < 2 {
        return Err(StatsError::TooFewSamples(count));
    }
    let mean = samples.iter().sum::<f64>() / count as f64;
    let (mut sq_pos, mut n_pos, mut sq_neg, mut n_neg, mut sq_all) = (0.0, 0usize, 0.0, 0usize, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &c in samples {
        let d = c - mean;
        sq_all += d * d;
        if d > 0.0 {
            sq_pos += d * d;
            n_pos += 1;
        } else if d < 0.0 {
            sq_neg += d * d;
            n_neg += 1;
        }
        min = min.min(c);
        max = max.max(c);
    }
    let rms = |sq: f64, n: usize| if n == 0 { 0.0 } else { (sq / n as f64).sqrt() };
    Ok(EnsembleSummary {
        // Clamp the rounding of the mean into the sample range.
        mean: mean.clamp(min, max),
        dev_pos: rms(sq_pos, n_pos),
        dev_neg: rms(sq_neg, n_neg),
        std_dev: (sq_all / (count - 1) as f64).sqrt(),
        count,
        min,
        max,
    })
}

/// Uniform-bin density estimate normalized over the in-range samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub densities: Vec<f64>,
    /// Samples below `lo` or above `hi`, not part of the normalization.
    pub outside: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    /// `Σ density · width`; 1 unless every sample fell outside the range.
    pub fn integral(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.bin_width()
    }

    /// CSV with header `bin_center,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_center,density")?;
        for (i, d) in self.densities.iter().enumerate() {
            writeln!(out, "{},{}", self.bin_center(i), d)?;
        }
        Ok(())
    }
}

/// Bins are half-open `[a, b)` except the last, which includes `hi`.
pub fn histogram(samples: &[f64], bins: usize, (lo, hi): (f64, f64)) -> Result<Histogram, StatsError> {
    if bins == 0 {
        return Err(StatsError::NoBins);
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(StatsError::EmptyRange(lo, hi));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    for &x in samples {
        if !(x >= lo && x <= hi) {
            outside += 1;
            continue;
        }
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let inside = samples.len() - outside;
    let densities =
        counts.iter().map(|&c| if inside == 0 { 0.0 } else { c as f64 / (inside as f64 * width) }).collect();
    Ok(Histogram { lo, hi, counts, densities, outside })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_samples_have_no_spread() {
        let s = summarize(&[0.3, 0.3, 0.3]).unwrap();
        assert_eq!(s.mean, 0.3);
        assert_eq!((s.dev_pos, s.dev_neg), (0.0, 0.0));
    }

    #[test]
    fn symmetric_pair() {
        let s = summarize(&[-1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!((s.dev_pos, s.dev_neg), (1.0, 1.0));
    }

    #[test]
    fn skewed_samples() {
        // mean 0; above: {3} → 3; below: {-1,-1,-1} → 1.
        let s = summarize(&[-1.0, -1.0, -1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.dev_pos, 3.0);
        assert_eq!(s.dev_neg, 1.0);
        assert!((s.std_dev - 2.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(summarize(&[1.0]), Err(StatsError::TooFewSamples(1)));
    }

    #[test]
    fn histogram_of_identical_samples() {
        let h = histogram(&[0.25; 10], 1, (0.0, 0.5)).unwrap();
        assert_eq!(h.densities, vec![2.0]);
        assert_eq!(h.outside, 0);
    }

    #[test]
    fn uniform_samples_are_flat() {
        let samples: Vec<f64> = (0..100_000).map(|i| -1.0 + (i as f64 + 0.5) / 100_000.0).collect();
        let h = histogram(&samples, 10, (-1.0, 0.0)).unwrap();
        for d in &h.densities {
            assert!((d - 1.0).abs() < 1e-9);
        }
        assert!((h.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_samples_are_counted() {
        let h = histogram(&[-2.0, -1.0, 0.0, 1.0, 1.5], 4, (-1.0, 1.0)).unwrap();
        assert_eq!(h.outside, 2);
        assert_eq!(h.counts.iter().sum::<usize>(), 3);
        assert_eq!(h.counts[3], 1);
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert!(histogram(&[0.0], 0, (0.0, 1.0)).is_err());
        assert!(histogram(&[0.0], 3, (1.0, 1.0)).is_err());
    }

    #[test]
    fn csv_layout() {
        let h = histogram(&[0.1, 0.6], 2, (0.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin_center,density\n0.25,1\n0.75,1\n");
    }

    proptest! {
        #[test]
        fn summary_invariants(samples in prop::collection::vec(-1.0f64..3.0, 2..200)) {
            let s = summarize(&samples).unwrap();
            prop_assert!(s.dev_pos >= 0.0 && s.dev_neg >= 0.0);
            prop_assert!(s.mean >= s.min && s.mean <= s.max);
        }

        #[test]
        fn histogram_normalized(samples in prop::collection::vec(-1.0f64..1.0, 1..300), bins in 1usize..60) {
            let h = histogram(&samples, bins, (-1.0, 1.0)).unwrap();
            prop_assert_eq!(h.outside, 0);
            prop_assert!((h.integral() - 1.0).abs() < 1e-9);
        }
    }
}
