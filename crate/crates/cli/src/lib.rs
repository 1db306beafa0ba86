//! Command implementations behind the `sbcpmu` binary.

pub mod config;
pub mod report;

use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use sbcpmu::characterization::{
    characterize_counters, characterize_delays, characterize_sweeps, read_counter_csv, read_delay_csv,
    read_sweep_csv, VarianceConvention,
};
use sbcpmu::uncertainty::monte_carlo;

pub use config::{load_profile, ScenarioConfig, Switch};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<sbcpmu::Error> for CliError {
    fn from(e: sbcpmu::Error) -> Self {
        let code = match &e {
            _ if e.is_guard_violation() => EXIT_GUARD,
            sbcpmu::Error::Io(_) => EXIT_IO,
            sbcpmu::Error::Csv(c) if c.is_io_error() => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Default, Clone)]
pub struct SimulateOverrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub compensate: Option<Switch>,
    pub temperature_c: Option<f64>,
}

/// Runs a scenario and writes `trials.csv`, `summary.csv`, `manifest.json`
/// and the effective `config.json` into the output directory.
pub fn simulate(config_path: &Path, o: &SimulateOverrides) -> Result<PathBuf, CliError> {
    let mut cfg = ScenarioConfig::load(config_path)?;
    if let Some(seed) = o.seed {
        cfg.run.seed = seed;
    }
    if let Some(trials) = o.trials {
        cfg.run.trials = trials;
    }
    if let Some(c) = o.compensate {
        cfg.compensation = c;
    }
    if o.temperature_c.is_some() {
        cfg.temperature_c = o.temperature_c;
    }
    // re-validate with overrides in place
    let cfg = ScenarioConfig::parse(&cfg.to_json(), config_path)?;
    let chain = cfg.load_chain(config_path)?;
    let scenario = cfg.scenario(chain)?;
    let out = match &o.out {
        Some(p) => p.clone(),
        None => ScenarioConfig::resolve(config_path, &cfg.output_dir),
    };
    let result = monte_carlo(&scenario)?;
    result.write_to_dir(&out)?;
    write(&out.join("config.json"), cfg.to_json().as_bytes())?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharacterizeKind {
    Sweep,
    Counter,
    Delay,
}

#[derive(Debug, Clone)]
pub struct CharacterizeOptions {
    pub kind: CharacterizeKind,
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub merge_into: Option<PathBuf>,
    pub known_base_hz: Option<f64>,
    pub nominal_rate_hz: Option<f64>,
    pub averages: usize,
    pub frequency_hz: f64,
    pub select_profile: Option<String>,
    pub population_variance: bool,
}

/// Fits block parameters from a CSV file. Returns the JSON document with the
/// full result and the profile fragment derived from it.
pub fn characterize(o: &CharacterizeOptions) -> Result<String, CliError> {
    let convention = if o.population_variance {
        VarianceConvention::Population
    } else {
        VarianceConvention::Unbiased
    };
    let input = open(&o.input)?;
    let (kind, result, fragment) = match o.kind {
        CharacterizeKind::Sweep => {
            let r = characterize_sweeps(&read_sweep_csv(input)?, convention)?;
            ("sweep", serde_json::to_value(&r).expect("serializable"), r.profile_fragment())
        }
        CharacterizeKind::Counter => {
            let known = o
                .known_base_hz
                .ok_or_else(|| CliError::config("counter input needs --known-base-hz"))?;
            let rate = o
                .nominal_rate_hz
                .ok_or_else(|| CliError::config("counter input needs --nominal-rate-hz"))?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(CliError::config("--nominal-rate-hz must be finite and > 0"));
            }
            let rows = read_counter_csv(input)?;
            let r = characterize_counters(&rows, known, 1.0 / rate, o.averages, o.frequency_hz, convention)?;
            ("counter", serde_json::to_value(&r).expect("serializable"), r.profile_fragment())
        }
        CharacterizeKind::Delay => {
            let r = characterize_delays(&read_delay_csv(input, o.known_base_hz)?)?;
            let fragment = r.profile_fragment(o.select_profile.as_deref())?;
            ("delay", serde_json::to_value(&r).expect("serializable"), fragment)
        }
    };
    if let Some(target) = &o.merge_into {
        merge_into(target, &fragment)?;
    }
    let doc = pretty(&json!({
        "kind": kind,
        "input": o.input.display().to_string(),
        "result": result,
        "profile_fragment": fragment,
    }));
    if let Some(out) = &o.out {
        write(out, doc.as_bytes())?;
    }
    Ok(doc)
}

fn merge_into(target: &Path, fragment: &Value) -> Result<(), CliError> {
    let base = load_profile(&target.display().to_string(), None)?;
    let merged = base.merge(fragment)?;
    write(target, merged.to_json()?.as_bytes())
}

/// Writes `report.txt` into `dir` and returns its text.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let text = report::render(dir)?;
    write(&dir.join("report.txt"), text.as_bytes())?;
    Ok(text)
}

pub fn profile_show(reference: &str) -> Result<String, CliError> {
    Ok(load_profile(reference, None)?.to_json()?)
}

/// Merges a JSON fragment file into a profile and returns the result.
pub fn profile_merge(base: &str, fragment: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(fragment).map_err(|e| CliError::io(format!("{}: {e}", fragment.display())))?;
    let mut patch: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", fragment.display())))?;
    // accept a whole `characterize` document as well as a bare fragment
    if let Some(inner) = patch.get("profile_fragment") {
        patch = inner.clone();
    }
    Ok(load_profile(base, None)?.merge(&patch)?.to_json()?)
}
