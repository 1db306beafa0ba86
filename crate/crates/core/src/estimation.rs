//! Sliding one-cycle Fourier phasor estimation, accuracy metrics and
//! compensation.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::BlockResponse;
use crate::error::{Error, Result};
use crate::signal::{wrap_angle, ComplexEnvelope, Waveform};

/// Minimum number of samples inside one estimation window.
pub const MIN_WINDOW_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integration {
    /// Left-point rectangles `Σ s(t_i)·e^{-jωt_i}·Δt_i`.
    #[default]
    Rectangular,
    Trapezoidal,
}

/// Parameters of the sliding window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationWindow {
    pub frequency: f64,
    pub harmonic: u32,
    /// Window length `T_p`, one nominal cycle by default.
    pub length: f64,
    pub rule: Integration,
    /// When set, windows that contain a PPS restart are dropped.
    pub pps_period: Option<f64>,
    /// Slide by this many samples between estimates.
    pub stride: usize,
}

impl EstimationWindow {
    pub fn new(frequency: f64) -> Self {
        Self {
            frequency,
            harmonic: 1,
            length: 1.0 / frequency,
            rule: Integration::Rectangular,
            pps_period: None,
            stride: 1,
        }
    }

    pub fn with_pps_period(mut self, period: f64) -> Self {
        self.pps_period = Some(period);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_rule(mut self, rule: Integration) -> Self {
        self.rule = rule;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::invalid("frequency", "must be finite and > 0"));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid("window length", "must be finite and > 0"));
        }
        if self.harmonic == 0 {
            return Err(Error::invalid("harmonic", "must be >= 1"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "must be >= 1"));
        }
        if let Some(p) = self.pps_period {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid("pps_period", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// A window that produced no estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub start: f64,
    pub reason: GapReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapReason {
    StraddlesPps,
}

/// Estimated envelope, each value labelled with the start of its window.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorEstimate {
    pub envelope: ComplexEnvelope,
    pub gaps: Vec<Gap>,
    pub window_length: f64,
}

impl PhasorEstimate {
    /// Time of the middle of each window.
    pub fn centers(&self) -> Vec<f64> {
        let half = self.window_length / 2.0;
        self.envelope.times().iter().map(|t| t + half).collect()
    }

    /// CSV with header `t_s,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_s,re,im")?;
        for (t, v) in self.envelope.iter() {
            writeln!(out, "{t:?},{:?},{:?}", v.re, v.im)?;
        }
        Ok(())
    }
}

fn interval_of(t: f64, period: Option<f64>) -> i64 {
    period.map_or(0, |p| (t / p).floor() as i64)
}

/// Sliding Fourier coefficient `c_n(t) = (2/T_p)·∫_t^{t+T_p} s·e^{-j2πnft} dt`.
///
/// The window starting at sample `i` holds every sample with
/// `t < t_i + T_p - ε`, `ε` being a thousandth of the local spacing.
pub fn fourier_phasor(waveform: &Waveform, window: &EstimationWindow) -> Result<PhasorEstimate> {
    window.validate()?;
    let t = waveform.times();
    let s = waveform.values();
    let n = t.len();
    if n < 2 {
        return Err(Error::UnresolvableWindow { samples: n });
    }
    let span = t[n - 1] - t[0];
    if span + (t[n - 1] - t[n - 2]) < window.length * (1.0 - 1e-6) {
        return Err(Error::WaveformTooShort {
            span_s: span,
            window_s: window.length,
        });
    }

    let period = window.pps_period;
    // Sample spacing; the step across a PPS restart is replaced by the previous one.
    let mut dt = vec![0.0; n];
    for j in 0..n {
        let forward = (j + 1 < n && interval_of(t[j], period) == interval_of(t[j + 1], period))
            .then(|| t[j + 1] - t[j]);
        dt[j] = match forward {
            Some(d) => d,
            None if j > 0 => dt[j - 1],
            None => t[1] - t[0],
        };
    }
    let omega = 2.0 * PI * window.frequency * window.harmonic as f64;
    let f: Vec<Complex64> = t
        .iter()
        .zip(s)
        .map(|(&ti, &si)| si * Complex64::from_polar(1.0, -omega * ti))
        .collect();

    let scale = 2.0 / window.length;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut gaps = Vec::new();
    let mut end = 0usize;
    let mut i = 0usize;
    while i < n {
        let eps = 1e-3 * dt[i];
        let limit = t[i] + window.length - eps;
        end = end.max(i);
        while end < n && t[end] < limit {
            end += 1;
        }
        // The trailing samples cannot fill a window.
        if end == n && t[n - 1] + dt[n - 1] < limit {
            break;
        }
        let count = end - i;
        if count < MIN_WINDOW_SAMPLES {
            return Err(Error::UnresolvableWindow { samples: count });
        }
        if interval_of(t[i], period) != interval_of(t[end - 1], period) {
            gaps.push(Gap {
                start: t[i],
                reason: GapReason::StraddlesPps,
            });
            i += window.stride;
            continue;
        }
        let sum: Complex64 = match window.rule {
            Integration::Rectangular => (i..end).map(|j| f[j] * dt[j]).sum(),
            Integration::Trapezoidal => {
                let closing = end < n && interval_of(t[end], period) == interval_of(t[i], period);
                if closing {
                    (i..end).map(|j| (f[j] + f[j + 1]) * 0.5 * (t[j + 1] - t[j])).sum()
                } else {
                    (i..end).map(|j| f[j] * dt[j]).sum()
                }
            }
        };
        times.push(t[i]);
        values.push(sum * scale);
        i += window.stride;
    }
    Ok(PhasorEstimate {
        envelope: ComplexEnvelope::new(times, values)?,
        gaps,
        window_length: window.length,
    })
}

/// Total vector error `|m - r| / |r|`.
pub fn tve(measured: Complex64, reference: Complex64) -> Result<f64> {
    let r = reference.norm();
    if r == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((measured - reference).norm() / r)
}

/// Frequency error `f·|1 - R|` of a time base running at ratio `R`.
pub fn frequency_error(nominal_frequency: f64, deviation_ratio: f64) -> f64 {
    nominal_frequency * (1.0 - deviation_ratio).abs()
}

/// A time series of TVE values.
#[derive(Debug, Clone, PartialEq)]
pub struct TveSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TveSeries {
    /// CSV with header `t_s,tve`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_s,tve")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t:?},{v:?}")?;
        }
        Ok(())
    }
}

/// TVE of every envelope value against a constant reference.
pub fn tve_series(envelope: &ComplexEnvelope, reference: Complex64) -> Result<TveSeries> {
    let values = envelope
        .values()
        .iter()
        .map(|&m| tve(m, reference))
        .collect::<Result<_>>()?;
    Ok(TveSeries {
        times: envelope.times().to_vec(),
        values,
    })
}

/// Splits a series at PPS edges and re-bases each slice to the time since its edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PpsSlice {
    pub seq_id: usize,
    pub t_in_pps: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn slice_by_pps(times: &[f64], values: &[f64], pps_period: f64) -> Vec<PpsSlice> {
    let mut slices: Vec<PpsSlice> = Vec::new();
    let mut current = None;
    for (&t, &v) in times.iter().zip(values) {
        let k = (t / pps_period).floor() as i64;
        if current != Some(k) {
            current = Some(k);
            slices.push(PpsSlice {
                seq_id: slices.len(),
                t_in_pps: Vec::new(),
                values: Vec::new(),
            });
        }
        let s = slices.last_mut().expect("slice pushed above");
        s.t_in_pps.push(t - k as f64 * pps_period);
        s.values.push(v);
    }
    slices
}

/// CSV overlay of PPS slices with header `t_in_pps_s,seq_id,tve`.
pub fn write_pps_overlay<W: Write>(slices: &[PpsSlice], mut out: W) -> Result<()> {
    writeln!(out, "t_in_pps_s,seq_id,tve")?;
    for s in slices {
        for (t, v) in s.t_in_pps.iter().zip(&s.values) {
            writeln!(out, "{t:?},{},{v:?}", s.seq_id)?;
        }
    }
    Ok(())
}

/// A measurement divided by the expected response, with its residual errors
/// when the true phasor is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedPhasor {
    pub value: Complex64,
    /// `|Ẑ| - |X|`, in the unit of the phasor.
    pub magnitude_error: Option<f64>,
    /// `arg Ẑ - arg X`, wrapped to `(-π, π]`.
    pub phase_error: Option<f64>,
}

/// `Ẑ = Z / (Λ·e^{jφ_Λ})`.
pub fn compensate(
    measured: Complex64,
    response: &BlockResponse,
    reference: Option<Complex64>,
) -> Result<CompensatedPhasor> {
    if !(response.magnitude.is_finite() && response.magnitude > 0.0 && response.phase.is_finite()) {
        return Err(Error::invalid("response", "magnitude must be > 0 and phase finite"));
    }
    let value = measured / response.to_complex();
    let (magnitude_error, phase_error) = match reference {
        Some(x) => (
            Some(value.norm() - x.norm()),
            Some(wrap_angle(value.arg() - x.arg())),
        ),
        None => (None, None),
    };
    Ok(CompensatedPhasor {
        value,
        magnitude_error,
        phase_error,
    })
}
