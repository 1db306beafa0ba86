//! Serializable description of a whole acquisition chain.
//!
//! Values are stored in the units named by their field suffix (`_ppm`, `_us`,
//! `_uv`, ...) so a profile survives a load/save cycle bit-for-bit. The
//! accessor methods convert to the SI block models.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::aaf::AafModel;
use super::adc::{AdcModel, AdcStatistics};
use super::pll::{DelayFamily, DelayHistogram, PllDelayModel};
use super::timebase::{TemperaturePoint, TimebaseModel};
use crate::characterization::stats::DelayTableRow;
use crate::error::{Error, Result};

const PPM: f64 = 1e-6;
const US: f64 = 1e-6;
const UV: f64 = 1e-6;

const BUNDLED: &str = include_str!("../../profiles/sbc-pmu-paper.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AafProfile {
    pub resistance_ohm: f64,
    pub capacitance_f: f64,
    pub resistor_tolerance: f64,
    pub capacitor_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcProfile {
    pub gain_error_ppm: f64,
    pub gain_std_ppm: f64,
    #[serde(default)]
    pub gain_within_device_std_ppm: f64,
    #[serde(default)]
    pub gain_estimator_std_ppm: f64,
    pub offset_uv: f64,
    #[serde(default)]
    pub offset_std_uv: f64,
    #[serde(default)]
    pub offset_within_device_std_uv: f64,
    #[serde(default)]
    pub offset_estimator_std_uv: f64,
    pub bits: u32,
    pub vref_v: f64,
    #[serde(default)]
    pub noise_rms_uv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureRow {
    pub temperature_c: f64,
    pub e_r_ppm: f64,
    pub e_r_std_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimebaseProfile {
    pub e_r_ppm: f64,
    pub e_r_std_ppm: f64,
    #[serde(default)]
    pub e_r_estimator_std_ppm: f64,
    #[serde(default)]
    pub by_temperature: Vec<TemperatureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramProfile {
    pub edges_us: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PllProfile {
    #[serde(default)]
    pub family: DelayFamily,
    pub delay_min_us: f64,
    #[serde(default)]
    pub delay_max_us: Option<f64>,
    pub delay_mean_us: f64,
    pub delay_std_us: f64,
    #[serde(default)]
    pub delay_mode_us: Option<f64>,
    #[serde(default)]
    pub histogram: Option<HistogramProfile>,
}

impl PllProfile {
    pub fn from_model(m: &PllDelayModel) -> Self {
        Self {
            family: m.family,
            delay_min_us: m.min / US,
            delay_max_us: m.max.map(|v| v / US),
            delay_mean_us: m.mean / US,
            delay_std_us: m.std / US,
            delay_mode_us: m.mode.map(|v| v / US),
            histogram: m.histogram.as_ref().map(|h| HistogramProfile {
                edges_us: h.edges.iter().map(|e| e / US).collect(),
                counts: h.counts.clone(),
            }),
        }
    }

    pub fn to_model(&self) -> Result<PllDelayModel> {
        let m = PllDelayModel {
            family: self.family,
            min: self.delay_min_us * US,
            max: self.delay_max_us.map(|v| v * US),
            mean: self.delay_mean_us * US,
            std: self.delay_std_us * US,
            mode: self.delay_mode_us.map(|v| v * US),
            histogram: self.histogram.as_ref().map(|h| DelayHistogram {
                edges: h.edges_us.iter().map(|e| e * US).collect(),
                counts: h.counts.clone(),
            }),
        };
        m.validate()?;
        Ok(m)
    }
}

/// Chain profile: every block's parameters and their spreads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainModel {
    pub name: String,
    #[serde(default)]
    pub aaf: Option<AafProfile>,
    #[serde(default)]
    pub adc: Option<AdcProfile>,
    pub timebase: TimebaseProfile,
    pub pll: PllProfile,
    /// Delay summaries measured under different system loads.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pll_profiles: Vec<DelayTableRow>,
    #[serde(default)]
    pub pps_jitter_ns: f64,
}

/// Realized parameters of one physical chain, used to acquire samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInstance {
    pub aaf: Option<AafModel>,
    pub adc: Option<AdcModel>,
    pub pll: PllDelayModel,
    pub pps_jitter_rms: f64,
}

impl ChainInstance {
    /// No filter, an ideal converter and no delay.
    pub fn identity() -> Self {
        Self {
            aaf: None,
            adc: None,
            pll: PllDelayModel::constant(0.0).expect("zero delay is valid"),
            pps_jitter_rms: 0.0,
        }
    }
}

impl ChainModel {
    /// The profile shipped with the library.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled profile is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.aaf() {
            a.validate()?;
        }
        if let Some(a) = self.adc() {
            a.validate()?;
        }
        self.timebase().validate()?;
        self.pll.to_model()?;
        for row in &self.pll_profiles {
            row.to_model()?;
        }
        if !(self.pps_jitter_ns.is_finite() && self.pps_jitter_ns >= 0.0) {
            return Err(Error::invalid("pps_jitter_ns", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn aaf(&self) -> Option<AafModel> {
        self.aaf.as_ref().map(|a| AafModel {
            resistance: a.resistance_ohm,
            capacitance: a.capacitance_f,
            resistor_tolerance: a.resistor_tolerance,
            capacitor_tolerance: a.capacitor_tolerance,
        })
    }

    pub fn adc(&self) -> Option<AdcModel> {
        self.adc.as_ref().map(|a| AdcModel {
            gain: 1.0 + a.gain_error_ppm * PPM,
            gain_rel_std: a.gain_std_ppm * PPM,
            offset: a.offset_uv * UV,
            offset_std: a.offset_std_uv * UV,
            bits: a.bits,
            vref: a.vref_v,
            noise_rms: a.noise_rms_uv * UV,
            stats: AdcStatistics {
                gain_within_device_std: a.gain_within_device_std_ppm * PPM,
                gain_estimator_std: a.gain_estimator_std_ppm * PPM,
                offset_within_device_std: a.offset_within_device_std_uv * UV,
                offset_estimator_std: a.offset_estimator_std_uv * UV,
            },
        })
    }

    pub fn timebase(&self) -> TimebaseModel {
        let t = &self.timebase;
        TimebaseModel {
            e_r_mean: t.e_r_ppm * PPM,
            e_r_std: t.e_r_std_ppm * PPM,
            e_r_estimator_std: t.e_r_estimator_std_ppm * PPM,
            by_temperature: t
                .by_temperature
                .iter()
                .map(|r| TemperaturePoint {
                    temperature_c: r.temperature_c,
                    e_r_mean: r.e_r_ppm * PPM,
                    e_r_std: r.e_r_std_ppm * PPM,
                })
                .collect(),
        }
    }

    pub fn pll(&self) -> Result<PllDelayModel> {
        self.pll.to_model()
    }

    /// Delay model fitted to a named load profile (case-insensitive).
    pub fn pll_profile(&self, name: &str) -> Result<PllDelayModel> {
        self.pll_profiles
            .iter()
            .find(|r| r.profile.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::invalid("pll_profile", format!("unknown profile `{name}`")))?
            .to_model()
    }

    /// The chain built with every parameter at its mean value.
    pub fn instance(&self) -> Result<ChainInstance> {
        self.validate()?;
        Ok(ChainInstance {
            aaf: self.aaf(),
            adc: self.adc(),
            pll: self.pll()?,
            pps_jitter_rms: self.pps_jitter_ns * 1e-9,
        })
    }

    /// Deep-merges a JSON fragment into this profile. Objects merge key by
    /// key, every other value replaces the existing one.
    pub fn merge(&self, fragment: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge_json(&mut base, fragment);
        let merged: Self = serde_json::from_value(base)?;
        merged.validate()?;
        Ok(merged)
    }
}

/// Recursive JSON merge: `patch` wins, objects merge key by key.
pub fn merge_json(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(existing) => merge_json(existing, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use serde_json::json;

    #[test]
    fn bundled_profile_values() {
        let m = ChainModel::bundled();
        let aaf = m.aaf().unwrap();
        assert_relative_eq!(aaf.tau(), 14.0981e-6, max_relative = 1e-9);
        let adc = m.adc().unwrap();
        assert_relative_eq!(adc.gain, 1.0 - 4459e-6);
        assert_eq!(adc.bits, 16);
        let tb = m.timebase();
        assert_relative_eq!(tb.e_r_mean, -16.02e-6);
        assert_eq!(tb.by_temperature.len(), 6);
        let pll = m.pll().unwrap();
        assert_relative_eq!(pll.mean, 7.93e-6);
        assert_eq!(m.pll_profiles.len(), 5);
        assert_relative_eq!(m.pll_profile("vm").unwrap().mean, 7.67e-6);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = ChainModel::bundled();
        let text = m.to_json().unwrap();
        let back = ChainModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = serde_json::to_value(ChainModel::bundled()).unwrap();
        v["adc"]["gain_ppb"] = json!(1.0);
        assert!(ChainModel::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn merge_replaces_leaves() {
        let m = ChainModel::bundled();
        let merged = m
            .merge(&json!({"adc": {"gain_error_ppm": -4000.0}, "name": "patched"}))
            .unwrap();
        assert_eq!(merged.name, "patched");
        assert_eq!(merged.adc.as_ref().unwrap().gain_error_ppm, -4000.0);
        assert_eq!(merged.adc.as_ref().unwrap().bits, 16);
        assert_eq!(merged.timebase, m.timebase);
        assert!(m.merge(&json!({"pll": {"delay_std_us": -1.0}})).is_err());
    }
}
