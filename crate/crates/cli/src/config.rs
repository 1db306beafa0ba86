//! Scenario files for `simulate`.
//!
//! Every physical quantity carries its unit in the key name. Unknown keys
//! are rejected so a misspelt unit never falls back to a default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sbcpmu::chain::{ChainModel, Combination};
use sbcpmu::uncertainty::{GainPopulation, McScenario, TemperatureMode};
use sbcpmu::Phasor;

use crate::CliError;

/// Prefix naming a profile shipped inside the binary.
pub const BUNDLED_PREFIX: &str = "bundled:";
pub const BUNDLED_NAME: &str = "sbc-pmu-paper";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub amplitude_v: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub rate_hz: f64,
    pub pps_period_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub seed: u64,
    /// Whole number of PPS periods.
    pub duration_s: f64,
    #[serde(default = "one")]
    pub channels: usize,
}

fn one() -> usize {
    1
}

fn default_coverage() -> f64 {
    3.3
}

fn default_stride() -> usize {
    10
}

/// Report settings with defaults, kept separate so a minimal config only
/// describes the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "default_coverage")]
    pub coverage_factor: f64,
    /// Window starts between reported points.
    #[serde(default = "default_stride")]
    pub stride_samples: usize,
    #[serde(default)]
    pub combination: Combination,
    #[serde(default)]
    pub gain_population: GainPopulation,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            coverage_factor: default_coverage(),
            stride_samples: default_stride(),
            combination: Combination::default(),
            gain_population: GainPopulation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `bundled:sbc-pmu-paper` or a profile path relative to the config file.
    pub chain_profile: String,
    pub signal: SignalConfig,
    pub schedule: ScheduleConfig,
    pub run: RunConfig,
    pub compensation: Switch,
    /// Fixed board temperature; absent means the pooled statistics.
    #[serde(default)]
    pub temperature_c: Option<f64>,
    pub output_dir: String,
    #[serde(default)]
    pub report: ReportConfig,
}

fn config_error(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("{}: {msg}", path.display()))
}

impl ScenarioConfig {
    /// Parses and validates; `origin` only labels diagnostics.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            config_error(
                origin,
                format!("line {} column {}, field `{field}`: {inner}", inner.line(), inner.column()),
            )
        })?;
        cfg.validate().map_err(|m| config_error(origin, m))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<(), String> {
        let positive = [
            ("signal.amplitude_v", self.signal.amplitude_v),
            ("signal.frequency_hz", self.signal.frequency_hz),
            ("schedule.rate_hz", self.schedule.rate_hz),
            ("schedule.pps_period_s", self.schedule.pps_period_s),
            ("run.duration_s", self.run.duration_s),
            ("report.coverage_factor", self.report.coverage_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("field `{name}`: must be finite and > 0, got {v}"));
            }
        }
        if !self.signal.phase_rad.is_finite() {
            return Err("field `signal.phase_rad`: must be finite".into());
        }
        if let Some(t) = self.temperature_c {
            if !t.is_finite() {
                return Err("field `temperature_c`: must be finite".into());
            }
        }
        for (name, v) in [
            ("run.trials", self.run.trials),
            ("run.channels", self.run.channels),
            ("report.stride_samples", self.report.stride_samples),
        ] {
            if v == 0 {
                return Err(format!("field `{name}`: must be >= 1"));
            }
        }
        self.intervals()?;
        if self.chain_profile.is_empty() {
            return Err("field `chain_profile`: must not be empty".into());
        }
        Ok(())
    }

    /// PPS intervals covered by `run.duration_s`.
    pub fn intervals(&self) -> Result<usize, String> {
        let ratio = self.run.duration_s / self.schedule.pps_period_s;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(format!(
                "field `run.duration_s`: {} s is not a whole number of {} s PPS periods",
                self.run.duration_s, self.schedule.pps_period_s
            ));
        }
        Ok(n as usize)
    }

    /// Resolves `reference` the way `chain_profile` is resolved.
    pub fn resolve(config_path: &Path, reference: &str) -> PathBuf {
        let base = config_path.parent().unwrap_or(Path::new(""));
        base.join(reference)
    }

    pub fn load_chain(&self, config_path: &Path) -> Result<ChainModel, CliError> {
        load_profile(&self.chain_profile, Some(config_path))
    }

    pub fn scenario(&self, chain: ChainModel) -> Result<McScenario, CliError> {
        let phasor = Phasor::new(self.signal.amplitude_v, self.signal.phase_rad, self.signal.frequency_hz)
            .map_err(CliError::from)?;
        let mut s = McScenario::new(chain, self.run.trials, self.run.seed);
        s.phasor = phasor;
        s.nominal_rate = self.schedule.rate_hz;
        s.pps_period = self.schedule.pps_period_s;
        s.intervals = self.intervals().map_err(CliError::config)?;
        s.channels = self.run.channels;
        s.compensate = self.compensation.is_on();
        s.temperature = match self.temperature_c {
            Some(temperature_c) => TemperatureMode::Fixed { temperature_c },
            None => TemperatureMode::Overall,
        };
        s.gain_population = self.report.gain_population;
        s.coverage_factor = self.report.coverage_factor;
        s.report_stride = self.report.stride_samples;
        s.combination = self.report.combination;
        Ok(s)
    }
}

/// Loads `bundled:<name>` or a JSON profile file. Relative paths resolve
/// against `config_path` when given, else the working directory.
pub fn load_profile(reference: &str, config_path: Option<&Path>) -> Result<ChainModel, CliError> {
    if let Some(name) = reference.strip_prefix(BUNDLED_PREFIX) {
        if name != BUNDLED_NAME {
            return Err(CliError::config(format!(
                "unknown bundled profile `{name}` (available: {BUNDLED_NAME})"
            )));
        }
        return Ok(ChainModel::bundled());
    }
    let path = match config_path {
        Some(c) => ScenarioConfig::resolve(c, reference),
        None => PathBuf::from(reference),
    };
    if !path.is_file() {
        return Err(CliError::config(format!(
            "chain profile {} does not exist",
            path.display()
        )));
    }
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    ChainModel::from_json(&text).map_err(|e| config_error(&path, e))
}
