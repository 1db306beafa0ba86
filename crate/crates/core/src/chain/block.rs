use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Magnitude and phase response of one block of the acquisition chain, with
/// the standard uncertainties that describe how the response varies across
/// instances of the block.
///
/// `time_slope_phase` is the part of the phase that grows with the time since
/// the last PPS edge (rad/s); `phase` already includes it at the evaluation
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockResponse {
    pub magnitude: f64,
    pub phase: f64,
    pub rel_magnitude_std: f64,
    pub phase_std: f64,
    pub time_slope_phase: f64,
}

/// How standard uncertainties of independent blocks are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combination {
    /// Same-sign linear sum, the bound used for the expected model curve.
    #[default]
    WorstCase,
    /// Root-sum-square.
    Quadrature,
}

impl Combination {
    pub fn combine(self, values: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            Combination::WorstCase => values.into_iter().map(f64::abs).sum(),
            Combination::Quadrature => values.into_iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

impl BlockResponse {
    pub const IDENTITY: BlockResponse = BlockResponse {
        magnitude: 1.0,
        phase: 0.0,
        rel_magnitude_std: 0.0,
        phase_std: 0.0,
        time_slope_phase: 0.0,
    };

    /// A response with no uncertainty.
    pub fn exact(magnitude: f64, phase: f64) -> Self {
        Self {
            magnitude,
            phase,
            ..Self::IDENTITY
        }
    }

    /// `Λ·e^{jφ_Λ}`.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }

    /// Relative magnitude error `Λ - 1`.
    pub fn magnitude_error(&self) -> f64 {
        self.magnitude - 1.0
    }
}

/// Cascades block responses: magnitudes multiply, phases and time slopes add,
/// and the standard uncertainties combine according to `combination`.
pub fn combined_response(blocks: &[BlockResponse], combination: Combination) -> BlockResponse {
    BlockResponse {
        magnitude: blocks.iter().map(|b| b.magnitude).product(),
        phase: blocks.iter().map(|b| b.phase).sum(),
        rel_magnitude_std: combination.combine(blocks.iter().map(|b| b.rel_magnitude_std)),
        phase_std: combination.combine(blocks.iter().map(|b| b.phase_std)),
        time_slope_phase: blocks.iter().map(|b| b.time_slope_phase).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cascade() {
        let a = BlockResponse {
            magnitude: 0.99,
            phase: -0.01,
            rel_magnitude_std: 3e-6,
            phase_std: 4e-6,
            time_slope_phase: 0.0,
        };
        let b = BlockResponse {
            magnitude: 1.02,
            phase: 0.003,
            rel_magnitude_std: 4e-6,
            phase_std: 3e-6,
            time_slope_phase: 1e-3,
        };
        let wc = combined_response(&[a, b], Combination::WorstCase);
        assert_relative_eq!(wc.magnitude, 0.99 * 1.02);
        assert_relative_eq!(wc.phase, -0.007);
        assert_relative_eq!(wc.rel_magnitude_std, 7e-6);
        assert_relative_eq!(wc.time_slope_phase, 1e-3);
        let q = combined_response(&[a, b], Combination::Quadrature);
        assert_relative_eq!(q.rel_magnitude_std, 5e-6, epsilon = 1e-18);
        assert_relative_eq!(q.phase_std, 5e-6, epsilon = 1e-18);
    }

    #[test]
    fn empty_cascade_is_identity() {
        assert_eq!(combined_response(&[], Combination::WorstCase), BlockResponse::IDENTITY);
    }
}
