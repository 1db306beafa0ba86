//! Descriptive statistics of measured delays.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::pll::PllDelayModel;
use crate::error::{Error, Result};

/// Summary of a set of delay measurements, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation about the mean.
    pub std: f64,
    /// Centre of the tallest Freedman–Diaconis histogram bin.
    pub mode: f64,
    /// Root mean square distance from the mode.
    pub std_mode: f64,
    /// Largest distance, in standard deviations, between the sorted data and
    /// the normal line of a Q-Q plot over the 1 %..99 % range.
    pub qq_deviation: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mode estimated from a Freedman–Diaconis histogram of sorted data. Ties go
/// to the bin closest to the median.
pub fn histogram_mode(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    if max == min {
        return min;
    }
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let mut width = 2.0 * iqr / (n as f64).cbrt();
    if width.is_nan() || width <= 0.0 {
        // Sturges' rule when the quartiles coincide
        width = (max - min) / ((n as f64).log2().ceil() + 1.0);
    }
    let bins = (((max - min) / width).ceil() as usize).max(1);
    let mut counts = vec![0usize; bins];
    for &x in sorted {
        let b = (((x - min) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let median = quantile(sorted, 0.5);
    let centre = |b: usize| min + (b as f64 + 0.5) * width;
    let top = *counts.iter().max().expect("at least one bin");
    (0..bins)
        .filter(|&b| counts[b] == top)
        .min_by(|&a, &b| {
            (centre(a) - median)
                .abs()
                .total_cmp(&(centre(b) - median).abs())
        })
        .map(centre)
        .expect("a tallest bin exists")
}

/// Maximum Q-Q deviation from the fitted normal line, in units of `std`.
fn qq_deviation(sorted: &[f64], mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    let n = sorted.len() as f64;
    let z = Normal::standard();
    sorted
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| {
            let p = (i as f64 + 0.5) / n;
            (0.01..=0.99)
                .contains(&p)
                .then(|| ((x - mean) / std - z.inverse_cdf(p)).abs())
        })
        .fold(0.0, f64::max)
}

pub fn delay_statistics(samples: &[f64]) -> Result<StatSummary> {
    if samples.len() < 2 {
        return Err(Error::invalid("samples", "at least two delays are needed"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples", "non-finite delay"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mode = histogram_mode(&sorted);
    let std_mode = (sorted.iter().map(|x| (x - mode).powi(2)).sum::<f64>() / n).sqrt();
    Ok(StatSummary {
        count: sorted.len(),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        std,
        mode,
        std_mode,
        qq_deviation: qq_deviation(&sorted, mean, std),
    })
}

/// One row of a delay statistics table, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayTableRow {
    pub profile: String,
    pub min_us: f64,
    pub max_us: f64,
    pub mean_us: f64,
    pub std_mean_us: f64,
    pub mode_us: f64,
    pub std_mode_us: f64,
}

impl DelayTableRow {
    pub fn from_summary(profile: &str, s: &StatSummary) -> Self {
        Self {
            profile: profile.to_string(),
            min_us: s.min * 1e6,
            max_us: s.max * 1e6,
            mean_us: s.mean * 1e6,
            std_mean_us: s.std * 1e6,
            mode_us: s.mode * 1e6,
            std_mode_us: s.std_mode * 1e6,
        }
    }

    /// Shifted-gamma delay model matched to the row's min, mean and std,
    /// with draws capped at the row's max.
    pub fn to_model(&self) -> Result<PllDelayModel> {
        PllDelayModel::shifted_gamma(
            self.min_us * 1e-6,
            self.mean_us * 1e-6,
            self.std_mean_us * 1e-6,
            Some(self.max_us * 1e-6),
        )
        .map_err(|e| Error::invalid(format!("profile {}", self.profile), e.to_string()))
    }
}
