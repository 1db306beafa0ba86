use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{
    aaf_response, adc_response, pll_response, timebase_response, BlockResponse, ChainModel, Combination,
};
use crate::error::{Error, Result};

/// Standard uncertainty of an output phasor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputUncertainty {
    /// Amplitude, in the unit of the phasor.
    pub amplitude_std: f64,
    pub phase_std: f64,
}

/// Uncertainty of `Λ·X` for a known input phasor `X`.
pub fn propagate_output(response: &BlockResponse, reference: Complex64) -> Result<OutputUncertainty> {
    if reference.norm() == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(OutputUncertainty {
        amplitude_std: reference.norm() * response.magnitude * response.rel_magnitude_std,
        phase_std: response.phase_std,
    })
}

/// Expanded uncertainty `k·u`.
pub fn expanded(u: f64, k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid("coverage_factor", "must be finite and > 0"));
    }
    if !(u.is_finite() && u >= 0.0) {
        return Err(Error::invalid("u", "must be finite and >= 0"));
    }
    Ok(k * u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub block: String,
    pub rel_magnitude_std: f64,
    pub phase_std: f64,
}

/// Per-block standard uncertainties of a chain at one instant after the PPS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBudget {
    pub entries: Vec<BudgetEntry>,
    pub coverage_factor: f64,
}

impl UncertaintyBudget {
    /// Combined `(relative magnitude, phase)` standard uncertainty.
    pub fn combined(&self, combination: Combination) -> (f64, f64) {
        (
            combination.combine(self.entries.iter().map(|e| e.rel_magnitude_std)),
            combination.combine(self.entries.iter().map(|e| e.phase_std)),
        )
    }

    /// Combined values multiplied by the coverage factor.
    pub fn expanded(&self, combination: Combination) -> (f64, f64) {
        let (m, p) = self.combined(combination);
        (m * self.coverage_factor, p * self.coverage_factor)
    }
}

/// Budget of every block of `chain` at `t` seconds after the PPS edge.
pub fn uncertainty_budget(
    chain: &ChainModel,
    omega: f64,
    t: f64,
    temperature_c: Option<f64>,
    coverage_factor: f64,
) -> Result<UncertaintyBudget> {
    expanded(0.0, coverage_factor)?;
    let mut entries = Vec::new();
    let mut push = |block: &str, r: BlockResponse| {
        entries.push(BudgetEntry {
            block: block.to_string(),
            rel_magnitude_std: r.rel_magnitude_std,
            phase_std: r.phase_std,
        })
    };
    if let Some(aaf) = chain.aaf() {
        push("aaf", aaf_response(&aaf, omega)?);
    }
    if let Some(adc) = chain.adc() {
        push("adc", adc_response(&adc));
    }
    push("timebase", timebase_response(&chain.timebase(), omega, t, temperature_c)?);
    let pll = chain.pll()?;
    push("pll", pll_response(-pll.mean, pll.std, omega));
    Ok(UncertaintyBudget {
        entries,
        coverage_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn output_uncertainty_scales_with_amplitude() {
        let r = BlockResponse {
            rel_magnitude_std: 1e-4,
            phase_std: 2e-3,
            ..BlockResponse::IDENTITY
        };
        let u = propagate_output(&r, Complex64::new(10.0, 0.0)).unwrap();
        assert_relative_eq!(u.amplitude_std, 1e-3);
        assert_eq!(u.phase_std, 2e-3);
        assert!(propagate_output(&r, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn expanded_rejects_bad_k() {
        assert_relative_eq!(expanded(0.1, 3.3).unwrap(), 0.33);
        assert!(expanded(0.1, 0.0).is_err());
    }

    #[test]
    fn bundled_budget() {
        let b = uncertainty_budget(&ChainModel::bundled(), 2.0 * PI * 50.0, 1.0, None, 3.3).unwrap();
        assert_eq!(b.entries.len(), 4);
        let (m, p) = b.combined(Combination::WorstCase);
        assert_relative_eq!(m, 135.14e-6, max_relative = 1e-3);
        // 257 + 1153 + 220 µrad
        assert_relative_eq!(p, 1630e-6, max_relative = 2e-3);
        let (_, pq) = b.combined(Combination::Quadrature);
        assert!(pq < p);
    }
}
