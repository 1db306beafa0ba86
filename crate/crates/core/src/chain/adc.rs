//! Gain/offset/quantization model of the analog-to-digital converter.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::block::BlockResponse;
use crate::error::{Error, Result};

/// Spread of the ADC parameters at each level of the characterization:
/// between the channels of one device, and of the regression estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdcStatistics {
    pub gain_within_device_std: f64,
    pub gain_estimator_std: f64,
    pub offset_within_device_std: f64,
    pub offset_estimator_std: f64,
}

/// `v_out = quantize(G·v_in + V_os + noise)`.
///
/// `gain` is the multiplicative gain `G = 1 + e_G`; `gain_rel_std` and
/// `offset_std` describe the whole population of devices and channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcModel {
    pub gain: f64,
    pub gain_rel_std: f64,
    pub offset: f64,
    pub offset_std: f64,
    pub bits: u32,
    pub vref: f64,
    pub noise_rms: f64,
    pub stats: AdcStatistics,
}

/// One conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcSample {
    pub value: f64,
    pub code: i64,
    pub saturated: bool,
}

impl AdcModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::invalid("gain", "must be finite and > 0"));
        }
        if !(1..=32).contains(&self.bits) {
            return Err(Error::invalid("bits", "must lie in 1..=32"));
        }
        if !(self.vref.is_finite() && self.vref > 0.0) {
            return Err(Error::invalid("vref", "must be finite and > 0"));
        }
        if !self.offset.is_finite() {
            return Err(Error::invalid("offset", "must be finite"));
        }
        let s = &self.stats;
        for (name, v) in [
            ("gain_rel_std", self.gain_rel_std),
            ("offset_std", self.offset_std),
            ("noise_rms", self.noise_rms),
            ("gain_within_device_std", s.gain_within_device_std),
            ("gain_estimator_std", s.gain_estimator_std),
            ("offset_within_device_std", s.offset_within_device_std),
            ("offset_estimator_std", s.offset_estimator_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Quantization step `Q = 2·V_ref / 2^n`.
    pub fn step(&self) -> f64 {
        2.0 * self.vref / 2f64.powi(self.bits as i32)
    }

    pub fn code_range(&self) -> (i64, i64) {
        let half = 1i64 << (self.bits - 1);
        (-half, half - 1)
    }

    /// Quantizes an already scaled voltage, saturating at the code range.
    pub fn quantize_raw(&self, v: f64) -> AdcSample {
        let q = self.step();
        let (lo, hi) = self.code_range();
        let raw = (v / q).round();
        let (code, saturated) = if raw < lo as f64 {
            (lo, true)
        } else if raw > hi as f64 {
            (hi, true)
        } else {
            (raw as i64, false)
        };
        AdcSample {
            value: code as f64 * q,
            code,
            saturated,
        }
    }
}

/// Applies gain, offset, optional white noise and quantization to `v`.
pub fn adc_quantize<R: Rng + ?Sized>(model: &AdcModel, v: f64, rng: &mut R) -> AdcSample {
    let noise = if model.noise_rms > 0.0 {
        Normal::new(0.0, model.noise_rms)
            .expect("validated noise")
            .sample(rng)
    } else {
        0.0
    };
    model.quantize_raw(model.gain * v + model.offset + noise)
}

/// Response to a sinusoid. The offset has no component at the signal
/// frequency and is left out.
pub fn adc_response(model: &AdcModel) -> BlockResponse {
    BlockResponse {
        magnitude: model.gain,
        phase: 0.0,
        rel_magnitude_std: model.gain_rel_std,
        phase_std: 0.0,
        time_slope_phase: 0.0,
    }
}
