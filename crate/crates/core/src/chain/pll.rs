//! Delay between the PPS edge and the restart of the sampling time base.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::block::BlockResponse;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayFamily {
    /// Gamma distribution shifted to start at `min`, matched to mean and std.
    #[default]
    ShiftedGamma,
    /// Normal truncated to `[min, max]`, with the underlying parameters chosen
    /// so the truncated mean and std match.
    TruncatedNormal,
    /// Draws from an empirical histogram.
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayHistogram {
    /// Bin edges in seconds, one more than `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Statistical model of the interrupt delay `τ_k`, all values in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PllDelayModel {
    pub family: DelayFamily,
    pub min: f64,
    pub max: Option<f64>,
    pub mean: f64,
    pub std: f64,
    pub mode: Option<f64>,
    pub histogram: Option<DelayHistogram>,
}

const MAX_REDRAWS: usize = 10_000;

impl PllDelayModel {
    pub fn shifted_gamma(min: f64, mean: f64, std: f64, max: Option<f64>) -> Result<Self> {
        let m = Self {
            family: DelayFamily::ShiftedGamma,
            min,
            max,
            mean,
            std,
            mode: None,
            histogram: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// A delay that never varies.
    pub fn constant(delay: f64) -> Result<Self> {
        Self::shifted_gamma(delay, delay, 0.0, Some(delay))
    }

    pub fn is_degenerate(&self) -> bool {
        self.std == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("min", self.min), ("mean", self.mean), ("std", self.std)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        if self.mean < self.min {
            return Err(Error::invalid("mean", "must be >= min"));
        }
        if let Some(max) = self.max {
            if !(max.is_finite() && max >= self.mean) {
                return Err(Error::invalid("max", "must be finite and >= mean"));
            }
        }
        if self.std == 0.0 {
            if self.mean != self.min {
                return Err(Error::invalid("std", "zero spread requires min == mean"));
            }
            return Ok(());
        }
        if self.mean == self.min && self.family != DelayFamily::Histogram {
            return Err(Error::invalid("mean", "must exceed min when std > 0"));
        }
        if self.family == DelayFamily::Histogram {
            let h = self
                .histogram
                .as_ref()
                .ok_or_else(|| Error::invalid("histogram", "required for the histogram family"))?;
            if h.edges.len() != h.counts.len() + 1 || h.counts.is_empty() {
                return Err(Error::invalid("histogram", "need one more edge than counts"));
            }
            if h.edges.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("histogram", "edges must be strictly increasing"));
            }
            if h.counts.iter().sum::<u64>() == 0 {
                return Err(Error::invalid("histogram", "all counts are zero"));
            }
        }
        Ok(())
    }

    /// Gamma shape and scale of the shifted-gamma family.
    pub fn gamma_parameters(&self) -> (f64, f64) {
        let excess = self.mean - self.min;
        (excess * excess / (self.std * self.std), self.std * self.std / excess)
    }

    /// Mean and std of the untruncated normal whose truncation to
    /// `[min, max]` has this model's mean and std.
    pub fn truncated_normal_parameters(&self) -> (f64, f64) {
        let (a, b) = (self.min, self.max.unwrap_or(f64::INFINITY));
        let (mut mu, mut sigma) = (self.mean, self.std);
        for _ in 0..500 {
            let (m, s) = truncated_moments(mu, sigma, a, b);
            let (mu_next, sigma_next) = (mu + (self.mean - m), sigma * self.std / s);
            let done = (mu_next - mu).abs() < 1e-15 * self.std.max(1e-300)
                && (sigma_next - sigma).abs() < 1e-12 * sigma;
            mu = mu_next;
            sigma = sigma_next;
            if done || !sigma.is_finite() {
                break;
            }
        }
        (mu, sigma)
    }
}

fn truncated_moments(mu: f64, sigma: f64, a: f64, b: f64) -> (f64, f64) {
    let n = Normal::standard();
    let alpha = (a - mu) / sigma;
    let beta = (b - mu) / sigma;
    let z = n.cdf(beta) - n.cdf(alpha);
    let (pa, pb) = (n.pdf(alpha), if b.is_finite() { n.pdf(beta) } else { 0.0 });
    let (ta, tb) = (alpha * pa, if b.is_finite() { beta * pb } else { 0.0 });
    let d = (pa - pb) / z;
    let var = sigma * sigma * (1.0 + (ta - tb) / z - d * d);
    (mu + sigma * d, var.max(0.0).sqrt())
}

/// Draws one delay `τ_k`.
pub fn pll_sample<R: Rng + ?Sized>(model: &PllDelayModel, rng: &mut R) -> f64 {
    if model.is_degenerate() {
        return model.mean;
    }
    match model.family {
        DelayFamily::ShiftedGamma => {
            let (shape, scale) = model.gamma_parameters();
            let g = Gamma::new(shape, scale).expect("validated gamma parameters");
            for _ in 0..MAX_REDRAWS {
                let x = model.min + g.sample(rng);
                if model.max.is_none_or(|max| x <= max) {
                    return x;
                }
            }
            model.max.unwrap_or(model.mean)
        }
        DelayFamily::TruncatedNormal => {
            let (mu, sigma) = model.truncated_normal_parameters();
            let n = Normal::new(mu, sigma).expect("positive sigma");
            let lo = n.cdf(model.min);
            let hi = model.max.map_or(1.0, |m| n.cdf(m));
            let u = lo + (hi - lo) * rng.random::<f64>();
            n.inverse_cdf(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
                .clamp(model.min, model.max.unwrap_or(f64::INFINITY))
        }
        DelayFamily::Histogram => {
            let h = model.histogram.as_ref().expect("validated histogram");
            let total: u64 = h.counts.iter().sum();
            let mut pick = rng.random_range(0..total);
            let mut bin = 0;
            for (i, &c) in h.counts.iter().enumerate() {
                if pick < c {
                    bin = i;
                    break;
                }
                pick -= c;
            }
            h.edges[bin] + (h.edges[bin + 1] - h.edges[bin]) * rng.random::<f64>()
        }
    }
}

/// Phase of a signed timing offset. A positive `delay` advances the phase.
pub fn pll_response(delay: f64, delay_std: f64, omega: f64) -> BlockResponse {
    BlockResponse {
        magnitude: 1.0,
        phase: omega * delay,
        rel_magnitude_std: 0.0,
        phase_std: omega * delay_std,
        time_slope_phase: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn response_phase() {
        let omega = 2.0 * PI * 50.0;
        let r = pll_response(20e-6, 0.0, omega);
        assert_relative_eq!(r.phase, 6.283e-3, max_relative = 1e-3);
        let r = pll_response(-7.93e-6, 0.7e-6, omega);
        assert_relative_eq!(r.phase, -2.491e-3, max_relative = 1e-3);
        assert_relative_eq!(r.phase_std, 219.9e-6, max_relative = 1e-3);
    }

    #[test]
    fn gamma_parameters_of_fitted_model() {
        let m = PllDelayModel::shifted_gamma(5.83e-6, 7.93e-6, 0.7e-6, None).unwrap();
        let (k, theta) = m.gamma_parameters();
        assert_relative_eq!(k, 9.0, max_relative = 1e-9);
        assert_relative_eq!(theta, 0.7e-6 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn gamma_draws_match_moments() {
        let m = PllDelayModel::shifted_gamma(5.83e-6, 7.93e-6, 0.7e-6, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..20_000).map(|_| pll_sample(&m, &mut rng)).collect();
        let (mean, std) = moments(&xs);
        assert!((mean - 7.93e-6).abs() < 4.0 * 0.7e-6 / (20_000f64).sqrt());
        assert_relative_eq!(std, 0.7e-6, max_relative = 0.03);
        assert!(xs.iter().all(|&x| x >= 5.83e-6));
    }

    #[test]
    fn truncated_normal_matches_moments() {
        let m = PllDelayModel {
            family: DelayFamily::TruncatedNormal,
            min: 4.55e-6,
            max: Some(14.65e-6),
            mean: 6.59e-6,
            std: 1.07e-6,
            mode: None,
            histogram: None,
        };
        let (mu, sigma) = m.truncated_normal_parameters();
        let (tm, ts) = truncated_moments(mu, sigma, 4.55e-6, 14.65e-6);
        assert_relative_eq!(tm, 6.59e-6, max_relative = 1e-9);
        assert_relative_eq!(ts, 1.07e-6, max_relative = 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000).map(|_| pll_sample(&m, &mut rng)).collect();
        let (mean, std) = moments(&xs);
        assert_relative_eq!(mean, 6.59e-6, max_relative = 0.01);
        assert_relative_eq!(std, 1.07e-6, max_relative = 0.03);
        assert!(xs.iter().all(|&x| (4.55e-6..=14.65e-6).contains(&x)));
    }

    #[test]
    fn histogram_draws_stay_in_bins() {
        let m = PllDelayModel {
            family: DelayFamily::Histogram,
            min: 1e-6,
            max: Some(3e-6),
            mean: 2e-6,
            std: 0.5e-6,
            mode: None,
            histogram: Some(DelayHistogram {
                edges: vec![1e-6, 2e-6, 3e-6],
                counts: vec![0, 5],
            }),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = pll_sample(&m, &mut rng);
            assert!((2e-6..3e-6).contains(&x));
        }
    }

    #[test]
    fn degenerate_is_constant() {
        let m = PllDelayModel::constant(6.59e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(pll_sample(&m, &mut rng), 6.59e-6);
        }
    }

    #[test]
    fn validation() {
        assert!(PllDelayModel::shifted_gamma(5e-6, 4e-6, 1e-6, None).is_err());
        assert!(PllDelayModel::shifted_gamma(5e-6, 6e-6, 1e-6, Some(5.5e-6)).is_err());
        assert!(PllDelayModel::shifted_gamma(5e-6, 6e-6, 0.0, None).is_err());
    }
}
