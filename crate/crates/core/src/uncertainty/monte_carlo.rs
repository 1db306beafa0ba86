//! Monte Carlo propagation through the forward model.
//!
//! Trial `i` draws from a ChaCha8 generator seeded with the base seed on
//! stream `i`, so results do not depend on thread scheduling. Within a trial
//! the time-base deviation is shared by all channels, every channel gets its
//! own filter and converter, and the PLL delay is redrawn at every PPS edge.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model_curve::{model_curve, phase_uncertainty_crossing, ModelPoint, ResponseParams};
use crate::chain::{acquire, BlockResponse, ChainInstance, ChainModel, Combination};
use crate::error::{Error, Result};
use crate::estimation::{compensate, fourier_phasor, frequency_error, tve, EstimationWindow};
use crate::signal::{build_schedule, wrap_angle, Phasor, Waveform};

/// Which temperature the time-base deviation is drawn at.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum TemperatureMode {
    /// Overall mean and total spread over all temperatures.
    #[default]
    Overall,
    /// Interpolated mean and spread at one temperature, also known to the compensator.
    Fixed { temperature_c: f64 },
    /// A uniformly drawn temperature per trial, unknown to the compensator.
    Uniform { low_c: f64, high_c: f64 },
}

/// How converter gains spread across the simulated channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainPopulation {
    /// Channels of one characterized device: spread by the within-device std.
    #[default]
    CalibratedDevice,
    /// Devices drawn from the fleet, then channels within each device.
    Fleet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McScenario {
    pub chain: ChainModel,
    pub phasor: Phasor,
    pub nominal_rate: f64,
    pub pps_period: f64,
    /// Number of PPS intervals per sequence set.
    pub intervals: usize,
    pub channels: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub compensate: bool,
    pub temperature: TemperatureMode,
    pub gain_population: GainPopulation,
    pub coverage_factor: f64,
    /// Report every `report_stride`-th window.
    pub report_stride: usize,
    pub combination: Combination,
}

impl McScenario {
    /// 10 V, 50 Hz sampled at 5 kHz for one PPS interval through `chain`.
    pub fn new(chain: ChainModel, trials: usize, base_seed: u64) -> Self {
        Self {
            chain,
            phasor: Phasor::new(10.0, 0.0, 50.0).expect("valid phasor"),
            nominal_rate: 5000.0,
            pps_period: 1.0,
            intervals: 1,
            channels: 1,
            trials,
            base_seed,
            compensate: false,
            temperature: TemperatureMode::Overall,
            gain_population: GainPopulation::CalibratedDevice,
            coverage_factor: 3.3,
            report_stride: 10,
            combination: Combination::WorstCase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        if self.trials == 0 || self.channels == 0 || self.intervals == 0 {
            return Err(Error::invalid(
                "trials",
                "trials, channels and intervals must all be >= 1",
            ));
        }
        if self.report_stride == 0 {
            return Err(Error::invalid("report_stride", "must be >= 1"));
        }
        if !(self.coverage_factor.is_finite() && self.coverage_factor > 0.0) {
            return Err(Error::invalid("coverage_factor", "must be finite and > 0"));
        }
        if let TemperatureMode::Uniform { low_c, high_c } = self.temperature {
            if !(low_c.is_finite() && high_c.is_finite() && low_c < high_c) {
                return Err(Error::invalid("temperature", "need low_c < high_c"));
            }
        }
        // also checks the rate, the period and the nominal guard
        build_schedule(self.nominal_rate, 1.0, vec![0.0], self.pps_period)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the scenario.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        let digest = Sha256::digest(&bytes);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.phasor.frequency()
    }

    /// Temperature known to the compensator.
    fn known_temperature(&self) -> Option<f64> {
        match self.temperature {
            TemperatureMode::Fixed { temperature_c } => Some(temperature_c),
            _ => None,
        }
    }
}

/// Error traces of one (trial, channel, interval) sequence on the report grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTrace {
    pub trial: usize,
    pub channel: usize,
    pub interval: usize,
    pub tve: Vec<f64>,
    pub magnitude_error: Vec<f64>,
    pub phase_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub temperature_c: Option<f64>,
    pub e_r: f64,
    pub frequency_error_hz: f64,
    pub saturated: usize,
    pub sequences: Vec<SequenceTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t_in_pps_s: f64,
    pub mean_tve: f64,
    pub std_tve: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub model_tve: f64,
    pub model_band: f64,
}

/// Scalar statistics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStatistics {
    pub sequences: usize,
    pub grand_mean_tve: f64,
    pub max_mean_tve: f64,
    pub mean_abs_magnitude_error_ppm: f64,
    pub mean_abs_phase_error_deg: f64,
    pub mean_frequency_error_hz: f64,
    pub model_frequency_error_hz: f64,
    pub model_tve_start: f64,
    pub model_tve_end: f64,
    pub model_band_end: f64,
    /// Time after the PPS at which the worst-case phase uncertainty reaches 0.09°.
    pub phase_band_crosses_0_09_deg_s: Option<f64>,
    pub saturated_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software_version: String,
    pub seed: u64,
    pub scenario_sha256: String,
    pub scenario: McScenario,
    pub statistics: McStatistics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub grid: Vec<f64>,
    pub trials: Vec<TrialOutcome>,
    pub summary: Vec<SummaryRow>,
    pub model: Vec<ModelPoint>,
    pub statistics: McStatistics,
    pub manifest: Manifest,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

struct Prepared {
    omega: f64,
    window: EstimationWindow,
    grid: Vec<f64>,
    window_starts: usize,
    base: ChainInstance,
    params: ResponseParams,
    reference: Complex64,
}

fn prepare(s: &McScenario) -> Result<Prepared> {
    s.validate()?;
    let omega = s.omega();
    let window = EstimationWindow::new(s.phasor.frequency()).with_stride(s.report_stride);
    let n_s = (s.pps_period * s.nominal_rate).round() as usize;
    let t_s = 1.0 / s.nominal_rate;
    let per_window = (window.length / t_s).round() as usize;
    if per_window < crate::estimation::MIN_WINDOW_SAMPLES {
        return Err(Error::UnresolvableWindow { samples: per_window });
    }
    if n_s < per_window {
        return Err(Error::WaveformTooShort {
            span_s: s.pps_period,
            window_s: window.length,
        });
    }
    let window_starts = (n_s - per_window) / s.report_stride + 1;
    let grid = (0..window_starts)
        .map(|j| (j * s.report_stride) as f64 * t_s + window.length / 2.0)
        .collect();
    Ok(Prepared {
        omega,
        window,
        grid,
        window_starts,
        base: s.chain.instance()?,
        params: ResponseParams::from_chain(&s.chain, omega, s.known_temperature())?,
        reference: s.phasor.to_complex(),
    })
}

fn run_trial(s: &McScenario, p: &Prepared, trial: usize) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.base_seed);
    rng.set_stream(trial as u64);

    let timebase = s.chain.timebase();
    let temperature = match s.temperature {
        TemperatureMode::Overall => None,
        TemperatureMode::Fixed { temperature_c } => Some(temperature_c),
        TemperatureMode::Uniform { low_c, high_c } => Some(rng.random_range(low_c..high_c)),
    };
    let (mean, std) = timebase.at_temperature(temperature);
    let e_r = mean + std * normal(&mut rng);
    let ratio = 1.0 + e_r;
    let delays = (0..s.intervals)
        .map(|_| crate::chain::pll_sample(&p.base.pll, &mut rng))
        .collect();
    let schedule = build_schedule(s.nominal_rate, ratio, delays, s.pps_period).map_err(|e| {
        Error::TrialRejected {
            trial,
            draw: format!("e_R = {:.4} ppm at {temperature:?} °C", e_r * 1e6),
            source: Box::new(e),
        }
    })?;

    let adc = s.chain.adc();
    let device_gain = match (adc, s.gain_population) {
        (Some(a), GainPopulation::Fleet) => {
            let between = (a.gain_rel_std.powi(2) - a.stats.gain_within_device_std.powi(2)).max(0.0);
            between.sqrt() * normal(&mut rng)
        }
        _ => 0.0,
    };
    let compensator = BlockResponse::exact(1.0, 0.0);
    let mut sequences = Vec::with_capacity(s.channels * s.intervals);
    let mut saturated = 0;
    for channel in 0..s.channels {
        let mut chain = p.base.clone();
        if let Some(aaf) = chain.aaf {
            let tau = (aaf.tau() + aaf.tau_std() * normal(&mut rng)).max(aaf.tau() * 1e-6);
            chain.aaf = Some(aaf.with_tau(tau)?);
        }
        if let Some(a) = chain.adc.as_mut() {
            a.gain += a.gain * (device_gain + a.stats.gain_within_device_std * normal(&mut rng));
            a.offset += a.stats.offset_within_device_std * normal(&mut rng);
        }
        let acq = acquire(&s.phasor, &chain, &schedule, &mut rng)?;
        saturated += acq.saturated;
        let n_s = schedule.samples_per_interval();
        let (times, values) = (acq.waveform.times(), acq.waveform.values());
        for interval in 0..s.intervals {
            let range = interval * n_s..(interval + 1) * n_s;
            let slice = Waveform::new(times[range.clone()].to_vec(), values[range].to_vec())?;
            let est = fourier_phasor(&slice, &p.window)?;
            let mut trace = SequenceTrace {
                trial,
                channel,
                interval,
                tve: Vec::with_capacity(p.window_starts),
                magnitude_error: Vec::with_capacity(p.window_starts),
                phase_error: Vec::with_capacity(p.window_starts),
            };
            for (j, &z) in est.envelope.values().iter().take(p.window_starts).enumerate() {
                let response = if s.compensate {
                    let l = p.params.mean_response(p.omega, p.grid[j]);
                    BlockResponse::exact(l.norm(), l.arg())
                } else {
                    compensator
                };
                let c = compensate(z, &response, Some(p.reference))?;
                trace.tve.push(tve(c.value, p.reference)?);
                trace
                    .magnitude_error
                    .push(c.magnitude_error.expect("reference given") / p.reference.norm());
                trace.phase_error.push(c.phase_error.expect("reference given"));
            }
            if trace.tve.len() != p.window_starts {
                return Err(Error::invalid(
                    "window",
                    format!("trial {trial}: {} of {} windows", trace.tve.len(), p.window_starts),
                ));
            }
            sequences.push(trace);
        }
    }
    let fe = if s.compensate {
        s.phasor.frequency() * (ratio - (1.0 + p.params.e_r)).abs()
    } else {
        frequency_error(s.phasor.frequency(), ratio)
    };
    Ok(TrialOutcome {
        trial,
        temperature_c: temperature,
        e_r,
        frequency_error_hz: fe,
        saturated,
        sequences,
    })
}

/// Runs every trial of `scenario` and summarizes the traces.
pub fn monte_carlo(scenario: &McScenario) -> Result<McResult> {
    let p = prepare(scenario)?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..scenario.trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, &p, i))
        .collect();
    // report the lowest failing trial, whatever the thread timing
    let trials: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let m = p.grid.len();
    let seqs: Vec<&SequenceTrace> = trials.iter().flat_map(|t| &t.sequences).collect();
    let n = seqs.len() as f64;
    let mut mean = vec![0.0; m];
    for s in &seqs {
        for (acc, v) in mean.iter_mut().zip(&s.tve) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; m];
    for s in &seqs {
        for ((acc, v), mu) in var.iter_mut().zip(&s.tve).zip(&mean) {
            *acc += (v - mu).powi(2);
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|v| if seqs.len() > 1 { (v / (n - 1.0)).sqrt() } else { 0.0 })
        .collect();

    let params = if scenario.compensate {
        p.params.residual()
    } else {
        p.params
    };
    let k = scenario.coverage_factor;
    let model = model_curve(&params, p.omega, &p.grid, k, scenario.combination)?;
    let model_k1 = model_curve(&params, p.omega, &p.grid, 1.0, scenario.combination)?;
    let summary: Vec<SummaryRow> = (0..m)
        .map(|j| SummaryRow {
            t_in_pps_s: p.grid[j],
            mean_tve: mean[j],
            std_tve: std[j],
            band_lo: (mean[j] - k * std[j]).max(0.0),
            band_hi: mean[j] + k * std[j],
            model_tve: if scenario.compensate {
                model_k1[j].band_hi
            } else {
                model[j].expected
            },
            model_band: model[j].band_hi,
        })
        .collect();

    let total_points = n * m as f64;
    let abs_sum = |f: fn(&SequenceTrace) -> &Vec<f64>| -> f64 {
        seqs.iter().map(|s| f(s).iter().map(|v| v.abs()).sum::<f64>()).sum::<f64>() / total_points
    };
    let model_fe = if scenario.compensate {
        // mean |N(0, u_R)|
        scenario.phasor.frequency() * p.params.u_r * (2.0 / PI).sqrt()
    } else {
        frequency_error(scenario.phasor.frequency(), 1.0 + p.params.e_r)
    };
    let statistics = McStatistics {
        sequences: seqs.len(),
        grand_mean_tve: mean.iter().sum::<f64>() / m as f64,
        max_mean_tve: mean.iter().copied().fold(0.0, f64::max),
        mean_abs_magnitude_error_ppm: abs_sum(|s| &s.magnitude_error) * 1e6,
        mean_abs_phase_error_deg: abs_sum(|s| &s.phase_error).to_degrees(),
        mean_frequency_error_hz: trials.iter().map(|t| t.frequency_error_hz).sum::<f64>()
            / trials.len() as f64,
        model_frequency_error_hz: model_fe,
        model_tve_start: summary[0].model_tve,
        model_tve_end: summary[m - 1].model_tve,
        model_band_end: summary[m - 1].model_band,
        phase_band_crosses_0_09_deg_s: phase_uncertainty_crossing(
            &p.params,
            p.omega,
            0.09f64.to_radians(),
            scenario.pps_period,
        ),
        saturated_samples: trials.iter().map(|t| t.saturated).sum(),
    };
    let manifest = Manifest {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenario.base_seed,
        scenario_sha256: scenario.hash()?,
        scenario: scenario.clone(),
        statistics: statistics.clone(),
    };
    Ok(McResult {
        grid: p.grid,
        trials,
        summary,
        model,
        statistics,
        manifest,
    })
}

impl McResult {
    /// Mean wrapped phase error of all traces at each grid point.
    pub fn mean_phase_error(&self) -> Vec<f64> {
        let seqs: Vec<&SequenceTrace> = self.trials.iter().flat_map(|t| &t.sequences).collect();
        (0..self.grid.len())
            .map(|j| seqs.iter().map(|s| wrap_angle(s.phase_error[j])).sum::<f64>() / seqs.len() as f64)
            .collect()
    }

    /// `t_in_pps_s,trial_id,tve` for every sequence; sequences are numbered in
    /// trial, channel, interval order.
    pub fn write_trials_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_in_pps_s,trial_id,tve")?;
        let mut id = 0usize;
        for t in &self.trials {
            for s in &t.sequences {
                for (g, v) in self.grid.iter().zip(&s.tve) {
                    writeln!(out, "{g:?},{id},{v:?}")?;
                }
                id += 1;
            }
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_in_pps_s,mean_tve,band_lo,band_hi,model_tve,model_band")?;
        for r in &self.summary {
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?}",
                r.t_in_pps_s, r.mean_tve, r.band_lo, r.band_hi, r.model_tve, r.model_band
            )?;
        }
        Ok(())
    }

    /// Writes `trials.csv`, `summary.csv` and `manifest.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut buf = Vec::new();
        self.write_trials_csv(&mut buf)?;
        fs::write(dir.join("trials.csv"), &buf)?;
        buf.clear();
        self.write_summary_csv(&mut buf)?;
        fs::write(dir.join("summary.csv"), &buf)?;
        let mut json = serde_json::to_string_pretty(&self.manifest)?;
        json.push('\n');
        fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_results() {
        let mut s = McScenario::new(ChainModel::bundled(), 4, 17);
        s.report_stride = 50;
        let a = monte_carlo(&s).unwrap();
        let b = monte_carlo(&s).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.trials, b.trials);
        s.base_seed = 18;
        assert_ne!(monte_carlo(&s).unwrap().summary, a.summary);
    }

    #[test]
    fn grid_and_sequences() {
        let mut s = McScenario::new(ChainModel::bundled(), 2, 1);
        s.channels = 3;
        s.intervals = 2;
        let r = monte_carlo(&s).unwrap();
        assert_eq!(r.grid.len(), 491);
        assert!((r.grid[0] - 0.01).abs() < 1e-15);
        assert_eq!(r.statistics.sequences, 12);
    }

    #[test]
    fn guard_violation_names_the_trial() {
        let mut chain = ChainModel::bundled();
        chain.timebase.e_r_ppm = 300.0;
        chain.timebase.e_r_std_ppm = 0.0;
        let s = McScenario::new(chain, 3, 1);
        let err = monte_carlo(&s).unwrap_err();
        assert!(err.is_guard_violation());
        assert!(matches!(err, Error::TrialRejected { trial: 0, .. }));
    }

    #[test]
    fn scenario_hash_is_stable() {
        let s = McScenario::new(ChainModel::bundled(), 10, 1);
        assert_eq!(s.hash().unwrap(), s.clone().hash().unwrap());
        let mut t = s.clone();
        t.trials = 11;
        assert_ne!(s.hash().unwrap(), t.hash().unwrap());
    }
}
