//! Slow-ramp sweep design: the filter seen by a ramp of slew rate `SR`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bias a first-order filter adds to a gain/offset sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// `SR = FS / τ_r`, V/s.
    pub slew_rate: f64,
    /// Equivalent angular frequency of the ramp `ω_r = SR / FS`.
    pub ramp_omega: f64,
    /// `1/√(1 + (ω_r·τ)²) - 1`.
    pub gain_error: f64,
    /// `-SR·Δφ/ω_r`, volts.
    pub offset_error: f64,
}

pub fn sweep_plan(full_scale: f64, filter_tau: f64, duration: f64) -> Result<SweepPlan> {
    for (name, v) in [
        ("full_scale", full_scale),
        ("filter_tau", filter_tau),
        ("duration", duration),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, "must be finite and > 0"));
        }
    }
    let slew_rate = full_scale / duration;
    let omega = slew_rate / full_scale;
    let x = omega * filter_tau;
    let root = (1.0 + x * x).sqrt();
    // 1/√(1+x²) - 1 without cancellation
    let gain_error = -x * x / (root * (1.0 + root));
    let delay = x.atan() / omega;
    Ok(SweepPlan {
        slew_rate,
        ramp_omega: omega,
        gain_error,
        offset_error: -slew_rate * delay,
    })
}
