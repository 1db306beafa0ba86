//! Forward model: what the device records when it samples a phasor.
//!
//! The device labels conversion `n` of interval `k` with
//! `k·T + τ_k + n·T_s`: its software timestamp of the restart plus the count
//! of nominal periods. The conversion really happens at `k·T + n·T_s·R`,
//! because the time base starts with the PPS edge and runs `R` times slow.
//! Relative to its labels the recorded signal therefore lags by `ω·τ_k` and
//! gains `ω·e_R·t`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::aaf::rc_response;
use super::model::ChainInstance;
use super::pll::pll_sample;
use crate::error::{Error, Result};
use crate::signal::{build_schedule, Phasor, SamplingSchedule, Waveform};

/// A recorded waveform and the number of conversions that hit the ADC rails.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub waveform: Waveform,
    pub saturated: usize,
}

/// Draws `intervals` delays from the chain's delay model and builds the schedule.
pub fn draw_schedule<R: Rng + ?Sized>(
    chain: &ChainInstance,
    nominal_rate: f64,
    deviation_ratio: f64,
    pps_period: f64,
    intervals: usize,
    rng: &mut R,
) -> Result<SamplingSchedule> {
    let delays = (0..intervals).map(|_| pll_sample(&chain.pll, rng)).collect();
    build_schedule(nominal_rate, deviation_ratio, delays, pps_period)
}

/// Samples `phasor` through `chain` on `schedule`.
pub fn acquire<R: Rng + ?Sized>(
    phasor: &Phasor,
    chain: &ChainInstance,
    schedule: &SamplingSchedule,
    rng: &mut R,
) -> Result<Acquisition> {
    let omega = phasor.omega();
    let (gain, shift) = match &chain.aaf {
        Some(aaf) => {
            aaf.validate()?;
            let h = rc_response(aaf.tau(), 0.0, omega);
            (h.magnitude, h.phase)
        }
        None => (1.0, 0.0),
    };
    if let Some(adc) = &chain.adc {
        adc.validate()?;
    }
    let jitter = if chain.pps_jitter_rms > 0.0 {
        Some(
            Normal::new(0.0, chain.pps_jitter_rms)
                .map_err(|e| Error::invalid("pps_jitter", e.to_string()))?,
        )
    } else {
        None
    };

    let amplitude = phasor.amplitude() * gain;
    let phase = phasor.phase() + shift;
    let t_s = schedule.nominal_period();
    let r = schedule.deviation_ratio();
    let period = schedule.pps_period();
    let n_s = schedule.samples_per_interval();

    let mut times = Vec::with_capacity(schedule.total_samples());
    let mut values = Vec::with_capacity(schedule.total_samples());
    let mut saturated = 0;
    for (k, &tau) in schedule.delays().iter().enumerate() {
        let edge = k as f64 * period;
        let j = jitter.as_ref().map_or(0.0, |d| d.sample(rng));
        for n in 0..n_s {
            let label = edge + tau + n as f64 * t_s;
            let t_true = edge + j + n as f64 * t_s * r;
            let analog = amplitude * (omega * t_true + phase).cos();
            let v = match &chain.adc {
                Some(adc) => {
                    let s = super::adc::adc_quantize(adc, analog, rng);
                    saturated += usize::from(s.saturated);
                    s.value
                }
                None => analog,
            };
            times.push(label);
            values.push(v);
        }
    }
    Ok(Acquisition {
        waveform: Waveform::new(times, values)?,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::pll::PllDelayModel;
    use crate::signal::synthesize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn identity_chain_matches_synthesis() {
        let p = Phasor::new(10.0, 0.3, 50.0).unwrap();
        let s = build_schedule(5000.0, 1.0, vec![0.0, 0.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = acquire(&p, &ChainInstance::identity(), &s, &mut rng).unwrap();
        let w = synthesize(&p, &s);
        assert_eq!(a.waveform.times(), w.times());
        for (x, y) in a.waveform.values().iter().zip(w.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_lags_labels() {
        let p = Phasor::new(1.0, 0.0, 50.0).unwrap();
        let s = build_schedule(5000.0, 1.0, vec![20e-6], 1.0).unwrap();
        let chain = ChainInstance {
            pll: PllDelayModel::constant(20e-6).unwrap(),
            ..ChainInstance::identity()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = acquire(&p, &chain, &s, &mut rng).unwrap();
        // label 20 µs, value recorded at the true instant 0
        assert_eq!(a.waveform.times()[0], 20e-6);
        assert_eq!(a.waveform.values()[0], 1.0);
        let n = 37;
        let expected = (2.0 * PI * 50.0 * (a.waveform.times()[n] - 20e-6)).cos();
        assert!((a.waveform.values()[n] - expected).abs() < 1e-12);
    }

    #[test]
    fn saturation_is_counted() {
        let chain = crate::chain::model::ChainModel::bundled().instance().unwrap();
        let p = Phasor::new(12.0, 0.0, 50.0).unwrap();
        let s = build_schedule(5000.0, 1.0, vec![0.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = acquire(&p, &chain, &s, &mut rng).unwrap();
        assert!(a.saturated > 0);
    }
}
