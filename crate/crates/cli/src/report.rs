//! Plain-text summary of a run directory against the steady-state limits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use sbcpmu::uncertainty::Manifest;

use crate::CliError;

pub const TVE_LIMIT: f64 = 0.01;
pub const FE_LIMIT_HZ: f64 = 5e-3;

#[derive(Debug, Deserialize)]
struct SummaryLine {
    t_in_pps_s: f64,
    mean_tve: f64,
    model_tve: f64,
}

fn mark(value: f64, limit: f64) -> &'static str {
    if value < limit {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Builds the report text for `dir`. Output depends only on the files in
/// the directory, so archived runs reproduce it exactly.
pub fn render(dir: &Path) -> Result<String, CliError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::io(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", manifest_path.display())))?;

    let summary_path = dir.join("summary.csv");
    let mut reader = csv::Reader::from_path(&summary_path)
        .map_err(|e| CliError::io(format!("{}: {e}", summary_path.display())))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<SummaryLine>, _>>()
        .map_err(|e| CliError::config(format!("{}: {e}", summary_path.display())))?;
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(CliError::config(format!("{}: no rows", summary_path.display())));
    };
    let peak = rows.iter().map(|r| r.mean_tve).fold(0.0, f64::max);
    let peak_model = rows.iter().map(|r| r.model_tve).fold(0.0, f64::max);

    let s = &manifest.scenario;
    let st = &manifest.statistics;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "run: trials {}, channels {}, PPS intervals {}, seed {}, compensation {}",
        s.trials,
        s.channels,
        s.intervals,
        manifest.seed,
        if s.compensate { "on" } else { "off" }
    );
    let _ = writeln!(out, "scenario sha256: {}", manifest.scenario_sha256);
    if s.compensate {
        let _ = writeln!(out, "model column: worst-case residual TVE at one standard uncertainty");
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<34} {:>12} {:>12} {:>10}  status",
        "quantity", "measured", "model", "limit"
    );
    let mut tve_row = |label: String, measured: f64, model: f64| {
        let _ = writeln!(
            out,
            "{label:<34} {:>10.4} % {:>10.4} % {:>8} %  {}",
            measured * 100.0,
            model * 100.0,
            TVE_LIMIT * 100.0,
            mark(measured, TVE_LIMIT)
        );
    };
    tve_row(format!("mean TVE at t = {:.4} s", first.t_in_pps_s), first.mean_tve, first.model_tve);
    tve_row(format!("mean TVE at t = {:.4} s", last.t_in_pps_s), last.mean_tve, last.model_tve);
    tve_row("peak mean TVE".into(), peak, peak_model);
    let _ = writeln!(
        out,
        "{:<34} {:>10.4} % {:>12} {:>8} %  {}",
        "grand-mean TVE",
        st.grand_mean_tve * 100.0,
        "",
        TVE_LIMIT * 100.0,
        mark(st.grand_mean_tve, TVE_LIMIT)
    );
    let _ = writeln!(
        out,
        "{:<34} {:>8.1} uHz {:>8.1} uHz {:>6} mHz  {}",
        "frequency error",
        st.mean_frequency_error_hz * 1e6,
        st.model_frequency_error_hz * 1e6,
        FE_LIMIT_HZ * 1e3,
        mark(st.mean_frequency_error_hz, FE_LIMIT_HZ)
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "mean |magnitude error| {:.1} ppm, mean |angle error| {:.4} deg",
        st.mean_abs_magnitude_error_ppm, st.mean_abs_phase_error_deg
    );
    match st.phase_band_crosses_0_09_deg_s {
        Some(t) => {
            let _ = writeln!(out, "model phase uncertainty reaches 0.09 deg at t = {t:.3} s");
        }
        None => {
            let _ = writeln!(out, "model phase uncertainty stays below 0.09 deg");
        }
    }
    if st.saturated_samples > 0 {
        let _ = writeln!(out, "warning: {} saturated ADC samples", st.saturated_samples);
    }
    Ok(out)
}
