//! PWM time base: a free-running counter whose period deviates from nominal
//! by `e_R`, restarted at every PPS edge.

use serde::{Deserialize, Serialize};

use super::block::BlockResponse;
use crate::error::{Error, Result};

/// Deviation measured at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    pub temperature_c: f64,
    pub e_r_mean: f64,
    pub e_r_std: f64,
}

/// Relative period deviation `e_R = R - 1` and its spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimebaseModel {
    /// Mean over all temperatures and devices.
    pub e_r_mean: f64,
    /// Total spread over temperatures and devices.
    pub e_r_std: f64,
    /// Spread of a single measurement.
    pub e_r_estimator_std: f64,
    /// Per-temperature means and within-temperature spreads, sorted by temperature.
    pub by_temperature: Vec<TemperaturePoint>,
}

fn interpolate(points: &[TemperaturePoint], t: f64, f: impl Fn(&TemperaturePoint) -> f64) -> f64 {
    let first = &points[0];
    let last = &points[points.len() - 1];
    if t <= first.temperature_c {
        return f(first);
    }
    if t >= last.temperature_c {
        return f(last);
    }
    let i = points.partition_point(|p| p.temperature_c <= t);
    let (a, b) = (&points[i - 1], &points[i]);
    let w = (t - a.temperature_c) / (b.temperature_c - a.temperature_c);
    f(a) + w * (f(b) - f(a))
}

impl TimebaseModel {
    pub fn validate(&self) -> Result<()> {
        if !self.e_r_mean.is_finite() || self.e_r_mean <= -1.0 {
            return Err(Error::invalid("e_r_mean", "must be finite and > -1"));
        }
        for (name, v) in [
            ("e_r_std", self.e_r_std),
            ("e_r_estimator_std", self.e_r_estimator_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        for w in self.by_temperature.windows(2) {
            if w[1].temperature_c <= w[0].temperature_c {
                return Err(Error::invalid(
                    "by_temperature",
                    "temperatures must be strictly increasing",
                ));
            }
        }
        for p in &self.by_temperature {
            if !(p.temperature_c.is_finite()
                && p.e_r_mean.is_finite()
                && p.e_r_std.is_finite()
                && p.e_r_std >= 0.0)
            {
                return Err(Error::invalid("by_temperature", "non-finite or negative entry"));
            }
        }
        Ok(())
    }

    /// Mean deviation and its spread, interpolated piecewise-linearly between
    /// grid temperatures and clamped to the end points. Without a temperature
    /// (or without a grid) the overall values are returned.
    pub fn at_temperature(&self, temperature_c: Option<f64>) -> (f64, f64) {
        match temperature_c {
            Some(t) if !self.by_temperature.is_empty() => (
                interpolate(&self.by_temperature, t, |p| p.e_r_mean),
                interpolate(&self.by_temperature, t, |p| p.e_r_std),
            ),
            _ => (self.e_r_mean, self.e_r_std),
        }
    }

    /// `R = 1 + ē_R`.
    pub fn deviation_ratio(&self, temperature_c: Option<f64>) -> f64 {
        1.0 + self.at_temperature(temperature_c).0
    }
}

/// Phase error accumulated `t` seconds after the PPS restart.
pub fn timebase_response(
    model: &TimebaseModel,
    omega: f64,
    t: f64,
    temperature_c: Option<f64>,
) -> Result<BlockResponse> {
    model.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "time since the PPS edge must be finite and >= 0"));
    }
    let (mean, std) = model.at_temperature(temperature_c);
    Ok(BlockResponse {
        magnitude: 1.0,
        phase: omega * mean * t,
        rel_magnitude_std: 0.0,
        phase_std: omega * std * t,
        time_slope_phase: omega * mean,
    })
}
