//! Phasor and waveform primitives.
//!
//! A steady-state sinusoid `x(t) = A cos(2πft + φ)` is represented by its
//! [`Phasor`]. Sampled signals are [`Waveform`]s, and baseband envelopes are
//! [`ComplexEnvelope`]s. A [`SamplingSchedule`] describes the realized
//! conversion instants of a PPS-disciplined sampler whose time base runs at
//! `R` times the nominal period and restarts `τ_k` after every PPS edge.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Amplitude, phase and frequency of a steady-state sinusoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phasor {
    amplitude: f64,
    phase: f64,
    frequency: f64,
}

impl Phasor {
    pub fn new(amplitude: f64, phase: f64, frequency: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be finite and >= 0"));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid("frequency", "must be finite and > 0"));
        }
        Ok(Self {
            amplitude,
            phase: wrap_angle(phase),
            frequency,
        })
    }

    /// Builds a phasor from its complex value `A·e^{jφ}`.
    pub fn from_complex(value: Complex64, frequency: f64) -> Result<Self> {
        Self::new(value.norm(), value.arg(), frequency)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    /// The complex value `X = A·e^{jφ}`.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    /// Instantaneous value of the real signal at time `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * (self.omega() * t + self.phase).cos()
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        Self::new(amplitude, self.phase, self.frequency)
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if let Some(bad) = times.iter().position(|t| !t.is_finite()) {
        return Err(Error::invalid("times", format!("non-finite time at index {bad}")));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "times",
            format!("not strictly increasing at index {}", i + 1),
        ));
    }
    Ok(())
}

/// A real sampled signal: `(time, value)` pairs with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Waveform {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("{} values for {} times", values.len(), times.len()),
            ));
        }
        check_increasing(&times)?;
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Returns a copy with every value mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// CSV with header `time_s,value`, shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time_s,value")?;
        for (t, v) in self.iter() {
            writeln!(out, "{t:?},{v:?}")?;
        }
        Ok(())
    }
}

/// A complex baseband envelope (dynamic phasor) sampled in time.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    times: Vec<f64>,
    values: Vec<Complex64>,
}

impl ComplexEnvelope {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("{} values for {} times", values.len(), times.len()),
            ));
        }
        check_increasing(&times)?;
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Instantaneous amplitude `A(t)`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Instantaneous phase `φ(t)` in `(-π, π]`.
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.arg()).collect()
    }

    /// CSV with header `time_s,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time_s,re,im")?;
        for (t, v) in self.iter() {
            writeln!(out, "{t:?},{:?},{:?}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Realized sampling instants of a PPS-disciplined time base.
///
/// Interval `k` starts at `k·T` and holds `N_s` conversions at
/// `k·T + n·T_s·R + τ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    nominal_rate: f64,
    deviation_ratio: f64,
    pps_period: f64,
    delays: Vec<f64>,
    samples_per_interval: usize,
}

impl SamplingSchedule {
    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn nominal_period(&self) -> f64 {
        1.0 / self.nominal_rate
    }

    /// `R = T̂_s / T_s`.
    pub fn deviation_ratio(&self) -> f64 {
        self.deviation_ratio
    }

    pub fn pps_period(&self) -> f64 {
        self.pps_period
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn samples_per_interval(&self) -> usize {
        self.samples_per_interval
    }

    pub fn intervals(&self) -> usize {
        self.delays.len()
    }

    pub fn total_samples(&self) -> usize {
        self.delays.len() * self.samples_per_interval
    }

    /// Realized instant of conversion `n` in interval `k`.
    pub fn instant(&self, k: usize, n: usize) -> f64 {
        k as f64 * self.pps_period
            + n as f64 * self.nominal_period() * self.deviation_ratio
            + self.delays[k]
    }

    /// All realized instants in interval order.
    pub fn instants(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_samples());
        for k in 0..self.intervals() {
            for n in 0..self.samples_per_interval {
                out.push(self.instant(k, n));
            }
        }
        out
    }

    /// Same time base with a different set of per-interval delays.
    pub fn with_delays(&self, delays: Vec<f64>) -> Result<Self> {
        build_schedule(self.nominal_rate, self.deviation_ratio, delays, self.pps_period)
    }
}

/// Builds a sampling schedule and evaluates the pulse-count guard
/// `|R - 1|·N_s < 1`.
pub fn build_schedule(
    nominal_rate: f64,
    deviation_ratio: f64,
    delays: Vec<f64>,
    pps_period: f64,
) -> Result<SamplingSchedule> {
    if !(nominal_rate.is_finite() && nominal_rate > 0.0) {
        return Err(Error::invalid("nominal_rate", "must be finite and > 0"));
    }
    if !(pps_period.is_finite() && pps_period > 0.0) {
        return Err(Error::invalid("pps_period", "must be finite and > 0"));
    }
    if !(deviation_ratio.is_finite() && deviation_ratio > 0.0) {
        return Err(Error::invalid("deviation_ratio", "must be finite and > 0"));
    }
    let samples = (pps_period * nominal_rate).round();
    if samples < 1.0 {
        return Err(Error::invalid(
            "nominal_rate",
            "fewer than one sample per PPS interval",
        ));
    }
    let samples = samples as usize;
    let product = (deviation_ratio - 1.0).abs() * samples as f64;
    if product >= 1.0 {
        return Err(Error::PulseCountGuard {
            ratio: deviation_ratio,
            samples,
            product,
        });
    }
    let period = 1.0 / nominal_rate;
    let train = (samples as f64 - 1.0) * period * deviation_ratio;
    for (k, &tau) in delays.iter().enumerate() {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid(
                "delays",
                format!("delay {k} is {tau}; delays must be finite and >= 0"),
            ));
        }
        if tau + train >= pps_period {
            return Err(Error::invalid(
                "delays",
                format!("delay {k} ({tau} s) pushes the pulse train past the next PPS edge"),
            ));
        }
    }
    Ok(SamplingSchedule {
        nominal_rate,
        deviation_ratio,
        pps_period,
        delays,
        samples_per_interval: samples,
    })
}

/// Samples `phasor` at the realized instants of `schedule`.
pub fn synthesize(phasor: &Phasor, schedule: &SamplingSchedule) -> Waveform {
    let times = schedule.instants();
    let values = times.iter().map(|&t| phasor.value_at(t)).collect();
    Waveform { times, values }
}

/// The constant envelope `A·e^{jφ}` of a steady-state phasor.
pub fn ideal_envelope(phasor: &Phasor, times: &[f64]) -> Result<ComplexEnvelope> {
    let x = phasor.to_complex();
    ComplexEnvelope::new(times.to_vec(), vec![x; times.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ideal(rate: f64) -> SamplingSchedule {
        build_schedule(rate, 1.0, vec![0.0], 1.0).unwrap()
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn phasor_invariants() {
        assert!(Phasor::new(-1.0, 0.0, 50.0).is_err());
        assert!(Phasor::new(1.0, 0.0, 0.0).is_err());
        let p = Phasor::new(1.0, 3.0 * PI, 50.0).unwrap();
        assert_relative_eq!(p.phase(), PI, epsilon = 1e-12);
    }

    #[test]
    fn ideal_sampling_values() {
        let p = Phasor::new(10.0, 0.0, 50.0).unwrap();
        let w = synthesize(&p, &ideal(5000.0));
        assert_eq!(w.len(), 5000);
        assert_eq!(w.values()[0], 10.0);
        for n in [1usize, 17, 999, 4999] {
            let expected = 10.0 * (2.0 * PI * 50.0 * n as f64 * 200e-6).cos();
            assert_relative_eq!(w.values()[n], expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn quadrature_first_sample() {
        let p = Phasor::new(1.0, PI / 2.0, 50.0).unwrap();
        let w = synthesize(&p, &ideal(5000.0));
        assert!(w.values()[0].abs() < 1e-15);
    }

    #[test]
    fn deviated_schedule_first_sample() {
        let p = Phasor::new(1.0, 0.0, 50.0).unwrap();
        let s = build_schedule(5000.0, 1.0 + 16e-6, vec![7.93e-6], 1.0).unwrap();
        let w = synthesize(&p, &s);
        assert_relative_eq!(w.times()[0], 7.93e-6);
        assert_relative_eq!(w.values()[0], 0.999_996_896, epsilon = 1e-9);
        // sample n sits at n·T_s·R + τ, so its phase leads the ideal one by ω(R-1)n·T_s + ωτ
        let n = 4000;
        let t_nominal = n as f64 / 5000.0;
        let lead = 2.0 * PI * 50.0 * (16e-6 * t_nominal + 7.93e-6);
        let expected = (2.0 * PI * 50.0 * t_nominal + lead).cos();
        assert_relative_eq!(w.values()[n], expected, epsilon = 1e-12);
    }

    #[test]
    fn schedule_guard() {
        let s = build_schedule(5000.0, 1.0, vec![0.0], 1.0).unwrap();
        assert_eq!(s.samples_per_interval(), 5000);
        assert!(build_schedule(5000.0, 1.0 - 16.0e-6, vec![6.59e-6], 1.0).is_ok());
        let err = build_schedule(50_000.0, 1.0 + 2.5e-5, vec![0.0], 1.0).unwrap_err();
        match err {
            Error::PulseCountGuard { product, samples, .. } => {
                assert_eq!(samples, 50_000);
                assert_relative_eq!(product, 1.25, epsilon = 1e-9);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schedule_rejects_bad_inputs() {
        assert!(build_schedule(0.0, 1.0, vec![0.0], 1.0).is_err());
        assert!(build_schedule(5000.0, 1.0, vec![0.0], 0.0).is_err());
        assert!(build_schedule(5000.0, 1.0, vec![-1e-6], 1.0).is_err());
        assert!(build_schedule(5000.0, 1.0, vec![1e-3], 1.0).is_err());
    }

    #[test]
    fn envelope_is_constant() {
        let p = Phasor::new(1.0, PI / 4.0, 50.0).unwrap();
        let e = ideal_envelope(&p, &[0.0, 0.1, 0.2]).unwrap();
        for v in e.values() {
            assert_relative_eq!(v.re, 0.5f64.sqrt(), epsilon = 1e-15);
            assert_relative_eq!(v.im, 0.5f64.sqrt(), epsilon = 1e-15);
        }
        let p = Phasor::new(10.0, 0.0, 50.0).unwrap();
        let e = ideal_envelope(&p, &[0.0, 1.0]).unwrap();
        assert_eq!(e.values()[1], Complex64::new(10.0, 0.0));
    }

    #[test]
    fn envelope_real_part_recovers_samples() {
        let p = Phasor::new(3.0, 0.7, 50.0).unwrap();
        let w = synthesize(&p, &ideal(5000.0));
        let e = ideal_envelope(&p, w.times()).unwrap();
        for ((t, x), (_, env)) in w.iter().zip(e.iter()) {
            let rotated = env * Complex64::from_polar(1.0, p.omega() * t);
            assert_relative_eq!(rotated.re, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn waveform_rejects_non_monotone() {
        assert!(Waveform::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Waveform::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn csv_headers() {
        let w = Waveform::new(vec![0.0, 0.5], vec![1.0, -0.25]).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time_s,value\n0.0,1.0\n0.5,-0.25\n");
        let e = ComplexEnvelope::new(vec![0.1], vec![Complex64::new(1.0, -2.0)]).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time_s,re,im\n0.1,1.0,-2.0\n");
    }
}
