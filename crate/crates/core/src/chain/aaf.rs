//! First-order RC anti-aliasing filter.

use serde::{Deserialize, Serialize};

use super::block::BlockResponse;
use crate::error::{Error, Result};

/// RC low-pass with component tolerances. Tolerances are full-width relative
/// bounds of a uniform distribution, so the standard uncertainty is `tol/√3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AafModel {
    pub resistance: f64,
    pub capacitance: f64,
    pub resistor_tolerance: f64,
    pub capacitor_tolerance: f64,
}

impl AafModel {
    pub fn new(
        resistance: f64,
        capacitance: f64,
        resistor_tolerance: f64,
        capacitor_tolerance: f64,
    ) -> Result<Self> {
        let m = Self {
            resistance,
            capacitance,
            resistor_tolerance,
            capacitor_tolerance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("resistance", self.resistance), ("capacitance", self.capacitance)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        for (name, v) in [
            ("resistor_tolerance", self.resistor_tolerance),
            ("capacitor_tolerance", self.capacitor_tolerance),
        ] {
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                return Err(Error::invalid(name, "must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    /// Nominal time constant `τ = RC`.
    pub fn tau(&self) -> f64 {
        self.resistance * self.capacitance
    }

    /// `u_τ = √(R²u_C² + C²u_R²)`.
    pub fn tau_std(&self) -> f64 {
        let u_r = self.resistance * self.resistor_tolerance / 3f64.sqrt();
        let u_c = self.capacitance * self.capacitor_tolerance / 3f64.sqrt();
        (self.resistance.powi(2) * u_c.powi(2) + self.capacitance.powi(2) * u_r.powi(2)).sqrt()
    }

    /// The same filter with its capacitance rescaled to give time constant `tau`.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(
            self.resistance,
            tau / self.resistance,
            self.resistor_tolerance,
            self.capacitor_tolerance,
        )
    }
}

/// Response of an RC filter with time constant `tau` and time-constant
/// uncertainty `tau_std` at angular frequency `omega`.
pub fn rc_response(tau: f64, tau_std: f64, omega: f64) -> BlockResponse {
    let x = omega * tau;
    let h2 = 1.0 / (1.0 + x * x);
    BlockResponse {
        magnitude: h2.sqrt(),
        phase: -x.atan(),
        rel_magnitude_std: if tau > 0.0 { (tau_std / tau) * x * x * h2 } else { 0.0 },
        phase_std: tau_std * h2 * omega,
        time_slope_phase: 0.0,
    }
}

pub fn aaf_response(model: &AafModel, omega: f64) -> Result<BlockResponse> {
    model.validate()?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("omega", "must be finite and > 0"));
    }
    Ok(rc_response(model.tau(), model.tau_std(), omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn one_percent_corner() {
        // ωτ = 0.01 with 1 % resistor and 10 % capacitor
        let m = AafModel::new(1.0, 0.01, 0.01, 0.10).unwrap();
        let r = aaf_response(&m, 1.0).unwrap();
        assert_relative_eq!(r.magnitude - 1.0, -50e-6, max_relative = 0.01);
        assert_relative_eq!(r.phase, -10e-3, max_relative = 1e-3);
        assert_relative_eq!(r.rel_magnitude_std, 5.80e-6, max_relative = 0.01);
        assert_relative_eq!(r.phase_std, 0.580e-3, max_relative = 0.01);
    }

    #[test]
    fn closed_form_oracle() {
        let m = AafModel::new(1000.0, 14.0981e-9, 0.01, 0.10).unwrap();
        let omega = 2.0 * PI * 50.0;
        let r = aaf_response(&m, omega).unwrap();
        let h = num_complex::Complex64::new(1.0, 0.0)
            / num_complex::Complex64::new(1.0, omega * m.tau());
        assert_relative_eq!(r.magnitude, h.norm(), epsilon = 1e-15);
        assert_relative_eq!(r.phase, h.arg(), epsilon = 1e-15);
        // values of the bundled filter
        assert_relative_eq!(r.phase, -4429e-6, max_relative = 1e-4);
        assert_relative_eq!(r.magnitude - 1.0, -9.81e-6, max_relative = 1e-3);
        assert_relative_eq!(r.phase_std, 255e-6, max_relative = 0.01);
        assert_relative_eq!(r.rel_magnitude_std, 1.13e-6, max_relative = 0.01);
    }

    #[test]
    fn tau_std_components() {
        let m = AafModel::new(1000.0, 1e-8, 0.0, 0.1).unwrap();
        assert_relative_eq!(m.tau_std(), 1e-5 * 0.1 / 3f64.sqrt(), epsilon = 1e-18);
        let m = AafModel::new(1000.0, 1e-8, 0.05, 0.0).unwrap();
        assert_relative_eq!(m.tau_std(), 1e-5 * 0.05 / 3f64.sqrt(), epsilon = 1e-18);
    }

    #[test]
    fn rejects_bad_components() {
        assert!(AafModel::new(0.0, 1e-8, 0.01, 0.1).is_err());
        assert!(AafModel::new(1.0, 1e-8, 1.5, 0.1).is_err());
        let m = AafModel::new(1.0, 1e-8, 0.01, 0.1).unwrap();
        assert!(aaf_response(&m, 0.0).is_err());
    }
}
