//! Nested variance decomposition of characterization results.
//!
//! Without temperatures, each group is a device and its values are per-channel
//! estimates: the within-device variance is the mean of the group variances
//! and the total adds the variance of the device means.
//!
//! With temperatures, each group is a (temperature, device) cell of repeated
//! measurements: the estimator variance is the mean cell variance, the
//! within-device variance at temperature `T` adds the spread of the device
//! means at `T`, and the total is the mean spread of device means plus the
//! spread of the temperature means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceConvention {
    /// Divide by `n`.
    Population,
    /// Divide by `n - 1`.
    #[default]
    Unbiased,
}

impl VarianceConvention {
    /// Variance of `xs`, or `None` when it is undefined (one value, unbiased).
    pub fn variance(self, xs: &[f64]) -> Option<f64> {
        let n = xs.len();
        let denom = match self {
            VarianceConvention::Population if n >= 1 => n as f64,
            VarianceConvention::Unbiased if n >= 2 => (n - 1) as f64,
            _ => return None,
        };
        let m = mean(xs);
        Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / denom)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mean_defined(xs: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.into_iter().flatten().collect();
    (!v.is_empty()).then(|| mean(&v))
}

/// Values measured on one device, optionally at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub temperature_c: Option<f64>,
    pub device: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupedSamples {
    pub groups: Vec<SampleGroup>,
}

impl GroupedSamples {
    /// Adds `value` to the group of `(temperature, device)`, creating it if needed.
    pub fn push(&mut self, temperature_c: Option<f64>, device: &str, value: f64) {
        match self
            .groups
            .iter_mut()
            .find(|g| g.device == device && g.temperature_c == temperature_c)
        {
            Some(g) => g.values.push(value),
            None => self.groups.push(SampleGroup {
                temperature_c,
                device: device.to_string(),
                values: vec![value],
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureComponent {
    pub temperature_c: f64,
    pub mean: f64,
    /// `σ_X(T)`: repeat spread plus spread of device means at this temperature.
    pub within_device_std: f64,
    pub between_device_std: Option<f64>,
    pub devices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub grand_mean: f64,
    pub estimator_std: Option<f64>,
    pub within_device_std: f64,
    pub total_std: f64,
    pub by_temperature: Vec<TemperatureComponent>,
    /// `estimator <= within <= total`.
    pub ordering_holds: bool,
    /// Levels whose variance could not be estimated.
    pub flags: Vec<String>,
}

pub fn variance_decomposition(
    samples: &GroupedSamples,
    convention: VarianceConvention,
    estimator_std: Option<f64>,
) -> Result<DecompositionResult> {
    let groups = &samples.groups;
    if groups.is_empty() || groups.iter().any(|g| g.values.is_empty()) {
        return Err(Error::invalid("samples", "every group needs at least one value"));
    }
    if groups.iter().flat_map(|g| &g.values).any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples", "non-finite value"));
    }
    let with_t = groups.iter().filter(|g| g.temperature_c.is_some()).count();
    if with_t != 0 && with_t != groups.len() {
        return Err(Error::invalid(
            "temperature_c",
            "either every group or no group has a temperature",
        ));
    }
    let mut r = if with_t == 0 {
        by_device(groups, convention, estimator_std)
    } else {
        by_temperature(groups, convention)
    };
    let tol = 1e-12 * r.total_std.abs().max(1e-300);
    r.ordering_holds = r.estimator_std.is_none_or(|e| e <= r.within_device_std + tol)
        && r.within_device_std <= r.total_std + tol;
    Ok(r)
}

fn by_device(
    groups: &[SampleGroup],
    convention: VarianceConvention,
    estimator_std: Option<f64>,
) -> DecompositionResult {
    let mut flags = Vec::new();
    for g in groups {
        if convention.variance(&g.values).is_none() {
            flags.push(format!("device {}: single value, within-device variance undefined", g.device));
        }
    }
    let means: Vec<f64> = groups.iter().map(|g| mean(&g.values)).collect();
    let within = mean_defined(groups.iter().map(|g| convention.variance(&g.values))).unwrap_or(0.0);
    let between = convention.variance(&means).unwrap_or_else(|| {
        flags.push("single device: between-device variance undefined".into());
        0.0
    });
    DecompositionResult {
        grand_mean: mean(&means),
        estimator_std,
        within_device_std: within.sqrt(),
        total_std: (within + between).sqrt(),
        by_temperature: Vec::new(),
        ordering_holds: true,
        flags,
    }
}

fn by_temperature(groups: &[SampleGroup], convention: VarianceConvention) -> DecompositionResult {
    let mut flags = Vec::new();
    let mut temps: Vec<f64> = groups.iter().filter_map(|g| g.temperature_c).collect();
    temps.sort_by(f64::total_cmp);
    temps.dedup();

    for g in groups {
        if convention.variance(&g.values).is_none() {
            flags.push(format!(
                "{} °C device {}: single measurement, repeat variance undefined",
                g.temperature_c.unwrap_or(f64::NAN),
                g.device
            ));
        }
    }
    let estimator = mean_defined(groups.iter().map(|g| convention.variance(&g.values)));

    let mut components = Vec::new();
    let mut between_vars = Vec::new();
    for &t in &temps {
        let cells: Vec<&SampleGroup> = groups
            .iter()
            .filter(|g| g.temperature_c == Some(t))
            .collect();
        let device_means: Vec<f64> = cells.iter().map(|g| mean(&g.values)).collect();
        let repeat = mean_defined(cells.iter().map(|g| convention.variance(&g.values))).unwrap_or(0.0);
        let between = convention.variance(&device_means);
        if between.is_none() {
            flags.push(format!("{t} °C: single device, between-device variance undefined"));
        }
        between_vars.push(between);
        components.push(TemperatureComponent {
            temperature_c: t,
            mean: mean(&device_means),
            within_device_std: (repeat + between.unwrap_or(0.0)).sqrt(),
            between_device_std: between.map(f64::sqrt),
            devices: cells.len(),
        });
    }
    let t_means: Vec<f64> = components.iter().map(|c| c.mean).collect();
    let within = mean(&components.iter().map(|c| c.within_device_std.powi(2)).collect::<Vec<_>>());
    let between_t = convention.variance(&t_means).unwrap_or_else(|| {
        flags.push("single temperature: between-temperature variance undefined".into());
        0.0
    });
    let total = mean_defined(between_vars).unwrap_or(0.0) + between_t;
    DecompositionResult {
        grand_mean: mean(&t_means),
        estimator_std: estimator.map(f64::sqrt),
        within_device_std: within.sqrt(),
        total_std: total.sqrt(),
        by_temperature: components,
        ordering_holds: true,
        flags,
    }
}
