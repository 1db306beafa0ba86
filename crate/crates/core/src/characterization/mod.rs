//! Turning raw measurements into block parameters.

pub mod counter;
pub mod io;
pub mod ols;
pub mod stats;
pub mod sweep;
pub mod variance;

use serde::Serialize;
use serde_json::{json, Value};

pub use counter::{edge_separation, one_counter_estimate, required_averages, simulate_counts, OneCounterEstimate};
pub use io::{read_counter_csv, read_delay_csv, read_delay_table, read_sweep_csv, write_delay_table, CounterRow};
pub use ols::{ols_fit, OlsResult, SweepRecord};
pub use stats::{delay_statistics, DelayTableRow, StatSummary};
pub use sweep::{sweep_plan, SweepPlan};
pub use variance::{variance_decomposition, DecompositionResult, GroupedSamples, SampleGroup, VarianceConvention};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelFit {
    pub device: String,
    pub channel: String,
    pub fit: OlsResult,
}

/// Gain and offset of every channel and their decomposition. Gain figures
/// are `e_G = G - 1` in ppm, offsets in µV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub channels: Vec<ChannelFit>,
    pub gain_ppm: DecompositionResult,
    pub offset_uv: DecompositionResult,
}

impl SweepReport {
    /// Profile fragment updating the ADC block.
    pub fn profile_fragment(&self) -> Value {
        json!({ "adc": {
            "gain_error_ppm": self.gain_ppm.grand_mean,
            "gain_std_ppm": self.gain_ppm.total_std,
            "gain_within_device_std_ppm": self.gain_ppm.within_device_std,
            "gain_estimator_std_ppm": self.gain_ppm.estimator_std.unwrap_or(0.0),
            "offset_uv": self.offset_uv.grand_mean,
            "offset_std_uv": self.offset_uv.total_std,
            "offset_within_device_std_uv": self.offset_uv.within_device_std,
            "offset_estimator_std_uv": self.offset_uv.estimator_std.unwrap_or(0.0),
        }})
    }
}

pub fn characterize_sweeps(records: &[SweepRecord], convention: VarianceConvention) -> Result<SweepReport> {
    let mut channels = Vec::with_capacity(records.len());
    let mut gains = GroupedSamples::default();
    let mut offsets = GroupedSamples::default();
    let (mut cov_g, mut cov_v) = (0.0, 0.0);
    for r in records {
        let fit = ols_fit(r)?;
        gains.push(None, &r.device, (fit.gain - 1.0) * 1e6);
        offsets.push(None, &r.device, fit.offset_v * 1e6);
        cov_g += fit.cov_gain_gain;
        cov_v += fit.cov_offset_offset_v2;
        channels.push(ChannelFit {
            device: r.device.clone(),
            channel: r.channel.clone(),
            fit,
        });
    }
    let n = records.len() as f64;
    Ok(SweepReport {
        gain_ppm: variance_decomposition(&gains, convention, Some((cov_g / n).sqrt() * 1e6))?,
        offset_uv: variance_decomposition(&offsets, convention, Some((cov_v / n).sqrt() * 1e6))?,
        channels,
    })
}

/// One ratio estimate from a block of consecutive counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioMeasurement {
    pub device: String,
    pub temperature_c: Option<f64>,
    pub e_r_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterReport {
    pub measurements: Vec<RatioMeasurement>,
    /// Decomposition of `e_R` in ppm.
    pub e_r_ppm: DecompositionResult,
    pub per_measurement_error: f64,
    pub required_averages: u64,
    /// Counts at the end of a group that did not fill a block.
    pub dropped_counts: usize,
    /// `f·|e_R|` at the nominal frequency, Hz.
    pub frequency_error_hz: f64,
    /// `f·σ` for every dispersion the decomposition offers. Which one
    /// describes the residual after compensation depends on how the
    /// compensator was calibrated, so all are reported.
    pub frequency_error_bands: Vec<FrequencyErrorBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyErrorBand {
    pub source: String,
    pub std_ppm: f64,
    pub frequency_error_hz: f64,
}

fn frequency_error_bands(d: &DecompositionResult, nominal_frequency: f64) -> Vec<FrequencyErrorBand> {
    let mut sources = Vec::new();
    if let Some(e) = d.estimator_std {
        sources.push(("estimator".to_string(), e));
    }
    sources.push(("within-device".to_string(), d.within_device_std));
    for c in &d.by_temperature {
        sources.push((format!("within-device at {} C", c.temperature_c), c.within_device_std));
    }
    sources.push(("total".to_string(), d.total_std));
    sources
        .into_iter()
        .map(|(source, std_ppm)| FrequencyErrorBand {
            source,
            std_ppm,
            frequency_error_hz: nominal_frequency * std_ppm * 1e-6,
        })
        .collect()
}

impl CounterReport {
    /// Profile fragment updating the time base block.
    pub fn profile_fragment(&self) -> Value {
        let d = &self.e_r_ppm;
        let rows: Vec<Value> = d
            .by_temperature
            .iter()
            .map(|c| {
                json!({
                    "temperature_c": c.temperature_c,
                    "e_r_ppm": c.mean,
                    "e_r_std_ppm": c.within_device_std,
                })
            })
            .collect();
        json!({ "timebase": {
            "e_r_ppm": d.grand_mean,
            "e_r_std_ppm": d.total_std,
            "e_r_estimator_std_ppm": d.estimator_std.unwrap_or(0.0),
            "by_temperature": rows,
        }})
    }
}

/// Averages every `averages` consecutive counts of a (temperature, device)
/// group into one ratio estimate, then decomposes the estimates.
pub fn characterize_counters(
    rows: &[CounterRow],
    known_base: f64,
    nominal_period: f64,
    averages: usize,
    nominal_frequency: f64,
    convention: VarianceConvention,
) -> Result<CounterReport> {
    if averages == 0 {
        return Err(Error::invalid("averages", "must be >= 1"));
    }
    let mut order: Vec<(Option<f64>, String)> = Vec::new();
    for r in rows {
        let key = (r.temperature_c, r.device.clone());
        if !order.contains(&key) {
            order.push(key);
        }
    }
    let mut measurements = Vec::new();
    let mut grouped = GroupedSamples::default();
    let mut dropped = 0;
    let mut per = f64::NAN;
    for (t, device) in &order {
        let counts: Vec<u64> = rows
            .iter()
            .filter(|r| r.temperature_c == *t && &r.device == device)
            .map(|r| r.count)
            .collect();
        dropped += counts.len() % averages;
        for block in counts.chunks_exact(averages) {
            let e = one_counter_estimate(block, known_base, nominal_period)?;
            per = e.per_measurement_error;
            let ppm = (e.ratio_mean - 1.0) * 1e6;
            grouped.push(*t, device, ppm);
            measurements.push(RatioMeasurement {
                device: device.clone(),
                temperature_c: *t,
                e_r_ppm: ppm,
            });
        }
    }
    if measurements.is_empty() {
        return Err(Error::invalid(
            "averages",
            format!("no group holds {averages} counts"),
        ));
    }
    let d = variance_decomposition(&grouped, convention, None)?;
    Ok(CounterReport {
        frequency_error_hz: nominal_frequency * d.grand_mean.abs() * 1e-6,
        frequency_error_bands: frequency_error_bands(&d, nominal_frequency),
        e_r_ppm: d,
        per_measurement_error: per,
        required_averages: required_averages(per, counter::TARGET_RESOLUTION),
        dropped_counts: dropped,
        measurements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub summaries: Vec<(String, StatSummary)>,
    pub rows: Vec<DelayTableRow>,
}

impl DelayReport {
    /// Profile fragment replacing the load-profile table; with `select`, the
    /// chain's delay model is also refitted to that profile.
    pub fn profile_fragment(&self, select: Option<&str>) -> Result<Value> {
        let mut v = json!({ "pll_profiles": self.rows });
        if let Some(name) = select {
            let row = self
                .rows
                .iter()
                .find(|r| r.profile.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::invalid("profile", format!("no delays for `{name}`")))?;
            let model = row.to_model()?;
            v["pll"] = serde_json::to_value(crate::chain::model::PllProfile::from_model(&model))?;
        }
        Ok(v)
    }
}

pub fn characterize_delays(profiles: &[(String, Vec<f64>)]) -> Result<DelayReport> {
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for (name, xs) in profiles {
        let s = delay_statistics(xs)?;
        rows.push(DelayTableRow::from_summary(name, &s));
        summaries.push((name.clone(), s));
    }
    Ok(DelayReport { summaries, rows })
}
