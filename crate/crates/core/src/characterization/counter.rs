//! One-counter time-base measurement: a reference clock of known frequency
//! `F_k` is counted during one period of the time base under test.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resolution target of one ratio estimate, used for the required averages.
pub const TARGET_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneCounterEstimate {
    /// Mean of `R = T̂_s / T_s`.
    pub ratio_mean: f64,
    /// Sample std of the per-count ratios.
    pub ratio_std: f64,
    /// Standard error of `ratio_mean`.
    pub ratio_std_error: f64,
    /// Quantization of one count, `T_k / T_s`.
    pub per_measurement_error: f64,
    /// Counts needed to bring the quantization down to [`TARGET_RESOLUTION`].
    pub required_averages: u64,
    pub counts: usize,
}

/// Counts that are needed so the per-count quantization `T_k/T_s` averages
/// down to `target`.
pub fn required_averages(per_measurement_error: f64, target: f64) -> u64 {
    let n = (per_measurement_error / target).powi(2);
    // guard against 250000.00000000003 style round-off
    (n * (1.0 - 1e-12)).ceil().max(1.0) as u64
}

pub fn one_counter_estimate(
    counts: &[u64],
    known_base: f64,
    nominal_period: f64,
) -> Result<OneCounterEstimate> {
    if !(known_base.is_finite() && known_base > 0.0) {
        return Err(Error::invalid("known_base", "must be finite and > 0"));
    }
    if !(nominal_period.is_finite() && nominal_period > 0.0) {
        return Err(Error::invalid("nominal_period", "must be finite and > 0"));
    }
    if known_base * nominal_period < 10.0 {
        return Err(Error::invalid(
            "known_base",
            "the reference must tick many times per period (F_k·T_s >= 10)",
        ));
    }
    if counts.is_empty() {
        return Err(Error::invalid("counts", "no counts"));
    }
    let n = counts.len() as f64;
    let ratios: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / known_base / nominal_period)
        .collect();
    let mean = ratios.iter().sum::<f64>() / n;
    let std = if counts.len() > 1 {
        (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let per = 1.0 / (known_base * nominal_period);
    Ok(OneCounterEstimate {
        ratio_mean: mean,
        ratio_std: std,
        ratio_std_error: std / n.sqrt(),
        per_measurement_error: per,
        required_averages: required_averages(per, TARGET_RESOLUTION),
        counts: counts.len(),
    })
}

/// Delay of an edge measured as `count` ticks of the reference, and the
/// resolution of that measurement.
pub fn edge_separation(count: u64, known_base: f64) -> Result<(f64, f64)> {
    if !(known_base.is_finite() && known_base > 0.0) {
        return Err(Error::invalid("known_base", "must be finite and > 0"));
    }
    Ok((count as f64 / known_base, 1.0 / known_base))
}

/// Synthetic counts `floor(F_k·T_s·R + u)` with a uniform phase `u`.
pub fn simulate_counts<R: Rng + ?Sized>(
    ratio: f64,
    known_base: f64,
    nominal_period: f64,
    samples: usize,
    rng: &mut R,
) -> Vec<u64> {
    let ticks = known_base * nominal_period * ratio;
    (0..samples)
        .map(|_| (ticks + rng.random::<f64>()).floor() as u64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn required_averages_at_100mhz() {
        let e = one_counter_estimate(&[2000, 2000], 100e6, 1.0 / 50e3).unwrap();
        assert_relative_eq!(e.per_measurement_error, 5e-4, max_relative = 1e-12);
        assert_eq!(e.required_averages, 250_000);
    }

    #[test]
    fn edge_separation_value() {
        let (d, res) = edge_separation(659, 100e6).unwrap();
        assert_relative_eq!(d, 6.59e-6, max_relative = 1e-12);
        assert_relative_eq!(res, 10e-9, max_relative = 1e-12);
    }

    #[test]
    fn unbiased_with_dither() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = 1.0 - 16.02e-6;
        let counts = simulate_counts(r, 100e6, 1.0 / 5e3, 200_000, &mut rng);
        let e = one_counter_estimate(&counts, 100e6, 1.0 / 5e3).unwrap();
        assert!((e.ratio_mean - r).abs() < 4.0 * e.ratio_std_error);
    }

    #[test]
    fn rejects_slow_reference() {
        assert!(one_counter_estimate(&[1], 100.0, 0.01).is_err());
        assert!(one_counter_estimate(&[], 100e6, 1e-3).is_err());
    }
}
