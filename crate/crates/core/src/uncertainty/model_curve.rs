//! Expected TVE of the whole chain and its uncertainty band.
//!
//! The mean chain response is
//! `Λ̄(t) = exp((e_H + e_G) + j(e_P + ω·t·e_R + ω·e_τ))` and the TVE it causes
//! is `|Λ̄(t) - 1|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{aaf_response, ChainModel, Combination};
use crate::error::{Error, Result};

/// Means and standard uncertainties of the chain's error terms, in SI units:
/// radians for `e_p`, relative values for `e_h`/`e_g`/`e_r`, seconds for
/// `e_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseParams {
    pub e_p: f64,
    pub u_p: f64,
    pub e_h: f64,
    pub u_h: f64,
    pub e_g: f64,
    pub u_g: f64,
    pub e_r: f64,
    pub u_r: f64,
    pub e_tau: f64,
    pub u_tau: f64,
}

impl ResponseParams {
    /// Parameters implied by a chain profile. The PLL term is the negated
    /// mean delay.
    pub fn from_chain(chain: &ChainModel, omega: f64, temperature_c: Option<f64>) -> Result<Self> {
        let (e_p, u_p, e_h, u_h) = match chain.aaf() {
            Some(aaf) => {
                let r = aaf_response(&aaf, omega)?;
                (r.phase, r.phase_std, r.magnitude - 1.0, r.rel_magnitude_std)
            }
            None => (0.0, 0.0, 0.0, 0.0),
        };
        let (e_g, u_g) = chain
            .adc()
            .map_or((0.0, 0.0), |a| (a.gain - 1.0, a.gain_rel_std));
        let (e_r, u_r) = chain.timebase().at_temperature(temperature_c);
        let pll = chain.pll()?;
        Ok(Self {
            e_p,
            u_p,
            e_h,
            u_h,
            e_g,
            u_g,
            e_r,
            u_r,
            e_tau: -pll.mean,
            u_tau: pll.std,
        })
    }

    /// The same uncertainties with every mean removed, as left after an ideal
    /// compensation.
    pub fn residual(&self) -> Self {
        Self {
            e_p: 0.0,
            e_h: 0.0,
            e_g: 0.0,
            e_r: 0.0,
            e_tau: 0.0,
            ..*self
        }
    }

    pub fn magnitude_log_mean(&self) -> f64 {
        self.e_h + self.e_g
    }

    pub fn phase_mean(&self, omega: f64, t: f64) -> f64 {
        self.e_p + omega * t * self.e_r + omega * self.e_tau
    }

    pub fn magnitude_std(&self, combination: Combination) -> f64 {
        combination.combine([self.u_h, self.u_g])
    }

    pub fn phase_std(&self, omega: f64, t: f64, combination: Combination) -> f64 {
        combination.combine([self.u_p, omega * t * self.u_r, omega * self.u_tau])
    }

    /// `Λ̄(t)`.
    pub fn mean_response(&self, omega: f64, t: f64) -> Complex64 {
        Complex64::new(self.magnitude_log_mean(), self.phase_mean(omega, t)).exp()
    }
}

/// TVE `|e^{a + jb} - 1|` of a response with log-magnitude `a` and phase `b`.
pub fn response_tve(a: f64, b: f64) -> f64 {
    (Complex64::new(a, b).exp() - 1.0).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub t: f64,
    pub expected: f64,
    /// Smallest TVE inside the `±k·u` box around the means.
    pub band_lo: f64,
    /// Largest TVE inside the box, reached at one of its corners.
    pub band_hi: f64,
}

pub fn model_curve(
    params: &ResponseParams,
    omega: f64,
    t_grid: &[f64],
    coverage_factor: f64,
    combination: Combination,
) -> Result<Vec<ModelPoint>> {
    if !(coverage_factor.is_finite() && coverage_factor >= 0.0) {
        return Err(Error::invalid("coverage_factor", "must be finite and >= 0"));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("omega", "must be finite and > 0"));
    }
    let ua = coverage_factor * params.magnitude_std(combination);
    let a = params.magnitude_log_mean();
    t_grid
        .iter()
        .map(|&t| {
            if !t.is_finite() {
                return Err(Error::invalid("t_grid", "non-finite time"));
            }
            let b = params.phase_mean(omega, t);
            let ub = coverage_factor * params.phase_std(omega, t, combination);
            let band_hi = [(a - ua, b - ub), (a - ua, b + ub), (a + ua, b - ub), (a + ua, b + ub)]
                .iter()
                .map(|&(x, y)| response_tve(x, y))
                .fold(0.0, f64::max);
            // |e^{x+jy} - 1|² = e^{2x} - 2e^x·cos y + 1 is smallest at the
            // |y| closest to zero, then at e^x closest to cos y.
            let y = 0f64.clamp(b - ub, b + ub);
            let x = y.cos().ln().clamp(a - ua, a + ua);
            Ok(ModelPoint {
                t,
                expected: response_tve(a, b),
                band_lo: response_tve(x, y),
                band_hi,
            })
        })
        .collect()
}

/// Time after the PPS at which the combined phase uncertainty reaches
/// `threshold` radians, if it does so within `[0, horizon]`.
pub fn phase_uncertainty_crossing(
    params: &ResponseParams,
    omega: f64,
    threshold: f64,
    horizon: f64,
) -> Option<f64> {
    let at0 = params.phase_std(omega, 0.0, Combination::WorstCase);
    if at0 >= threshold {
        return Some(0.0);
    }
    let slope = omega * params.u_r.abs();
    if slope == 0.0 {
        return None;
    }
    let t = (threshold - at0) / slope;
    (t <= horizon).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const OMEGA: f64 = 2.0 * PI * 50.0;

    fn table() -> ResponseParams {
        ResponseParams {
            e_p: -4429e-6,
            u_p: 255e-6,
            e_h: -9.81e-6,
            u_h: 1.13e-6,
            e_g: -4459e-6,
            u_g: 134e-6,
            e_r: -16.02e-6,
            u_r: 3.67e-6,
            e_tau: -7.93e-6,
            u_tau: 0.7e-6,
        }
    }

    #[test]
    fn expected_curve_end_points() {
        let c = model_curve(&table(), OMEGA, &[0.0, 0.5, 1.0], 3.3, Combination::WorstCase).unwrap();
        let p = table();
        for (i, t) in [(0usize, 0.0), (2, 1.0)] {
            let a = p.e_h + p.e_g;
            let b = p.e_p + OMEGA * t * p.e_r + OMEGA * p.e_tau;
            let oracle = ((a.exp() * b.cos() - 1.0).powi(2) + (a.exp() * b.sin()).powi(2)).sqrt();
            assert_relative_eq!(c[i].expected, oracle, max_relative = 1e-12);
        }
        assert!((c[0].expected - 0.82e-2).abs() < 0.02e-2);
        assert!((c[2].expected - 1.28e-2).abs() < 0.02e-2);
        assert!(c[1].expected > c[0].expected && c[1].expected < c[2].expected);
        for p in &c {
            assert!(p.band_lo <= p.expected && p.expected <= p.band_hi);
        }
    }

    #[test]
    fn residual_band_lower_bound_is_zero() {
        let r = table().residual();
        let c = model_curve(&r, OMEGA, &[0.0, 1.0], 1.0, Combination::WorstCase).unwrap();
        assert_eq!(c[0].expected, 0.0);
        assert_eq!(c[0].band_lo, 0.0);
        // 255 + 220 + 1153 µrad of phase and 135 ppm of magnitude
        assert_relative_eq!(c[1].band_hi, 1.634e-3, max_relative = 2e-3);
    }

    #[test]
    fn band_bounds_brute_force() {
        let p = table();
        let k = 3.3;
        let c = model_curve(&p, OMEGA, &[0.7], k, Combination::WorstCase).unwrap()[0];
        let ua = k * p.magnitude_std(Combination::WorstCase);
        let ub = k * p.phase_std(OMEGA, 0.7, Combination::WorstCase);
        let (a, b) = (p.magnitude_log_mean(), p.phase_mean(OMEGA, 0.7));
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..=100 {
            for j in 0..=100 {
                let x = a - ua + 2.0 * ua * i as f64 / 100.0;
                let y = b - ub + 2.0 * ub * j as f64 / 100.0;
                let v = response_tve(x, y);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert_relative_eq!(c.band_hi, hi, max_relative = 1e-12);
        assert!(c.band_lo <= lo + 1e-12);
        assert_relative_eq!(c.band_lo, lo, max_relative = 1e-3);
    }

    #[test]
    fn phase_threshold_crossing() {
        let t = phase_uncertainty_crossing(&table(), OMEGA, 0.09f64.to_radians(), 1.0).unwrap();
        assert!((t - 0.95).abs() < 0.01, "{t}");
        assert!(phase_uncertainty_crossing(&table(), OMEGA, 1.0, 1.0).is_none());
    }
}
