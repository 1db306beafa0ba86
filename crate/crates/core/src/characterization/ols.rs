//! Two-parameter least squares fit of an ADC transfer line `v_out = V + G·v_in`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One recorded sweep of a single channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub device: String,
    pub channel: String,
    pub v_in: Vec<f64>,
    pub v_out: Vec<f64>,
}

/// Estimates and covariance `K = RSS/(N-2)·(XᵀX)⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    pub offset_v: f64,
    pub gain: f64,
    pub cov_offset_offset_v2: f64,
    pub cov_offset_gain_v: f64,
    pub cov_gain_gain: f64,
    pub rss_v2: f64,
    pub dof: usize,
}

impl OlsResult {
    pub fn gain_std(&self) -> f64 {
        self.cov_gain_gain.sqrt()
    }

    pub fn offset_std(&self) -> f64 {
        self.cov_offset_offset_v2.sqrt()
    }
}

pub fn ols_fit(record: &SweepRecord) -> Result<OlsResult> {
    let (x, y) = (&record.v_in, &record.v_out);
    if x.len() != y.len() {
        return Err(Error::invalid("v_out", "length differs from v_in"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid("sweep", "at least 3 points are needed"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("sweep", "non-finite sample"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let scale = x.iter().map(|v| v * v).sum::<f64>();
    if sxx <= 1e-12 * scale || sxx == 0.0 {
        return Err(Error::RankDeficient(format!(
            "device {} channel {}: input voltage does not vary",
            record.device, record.channel
        )));
    }
    let gain = sxy / sxx;
    let offset = my - gain * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - offset - gain * a).powi(2))
        .sum();
    let s2 = rss / (nf - 2.0);
    // (XᵀX)⁻¹ = [[Σx², -Σx], [-Σx, N]] / (N·Sxx)
    let det = nf * sxx;
    Ok(OlsResult {
        offset_v: offset,
        gain,
        cov_offset_offset_v2: s2 * scale / det,
        cov_offset_gain_v: -s2 * nf * mx / det,
        cov_gain_gain: s2 / sxx,
        rss_v2: rss,
        dof: n - 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn record(x: Vec<f64>, y: Vec<f64>) -> SweepRecord {
        SweepRecord {
            device: "d".into(),
            channel: "c".into(),
            v_in: x,
            v_out: y,
        }
    }

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..11).map(|i| -5.0 + i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.995 * v - 2.69e-4).collect();
        let r = ols_fit(&record(x, y)).unwrap();
        assert_relative_eq!(r.gain, 0.995, epsilon = 1e-14);
        assert_relative_eq!(r.offset_v, -2.69e-4, epsilon = 1e-14);
        assert!(r.rss_v2 < 1e-24);
        assert_eq!(r.dof, 9);
    }

    #[test]
    fn covariance_of_small_example() {
        // x = 0,1,2,3 ; y = 1,3,2,5 -> G = 1.1, V = 1.1, RSS = 2.7
        let r = ols_fit(&record(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0, 5.0])).unwrap();
        assert_relative_eq!(r.gain, 1.1, epsilon = 1e-12);
        assert_relative_eq!(r.offset_v, 1.1, epsilon = 1e-12);
        assert_relative_eq!(r.rss_v2, 2.7, epsilon = 1e-12);
        // s² = 1.35, Sxx = 5, Σx² = 14
        assert_relative_eq!(r.cov_gain_gain, 1.35 / 5.0, epsilon = 1e-12);
        assert_relative_eq!(r.cov_offset_offset_v2, 1.35 * 14.0 / 20.0, epsilon = 1e-12);
        assert_relative_eq!(r.cov_offset_gain_v, -1.35 * 6.0 / 20.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficiency() {
        let r = ols_fit(&record(vec![1.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]));
        assert!(matches!(r, Err(Error::RankDeficient(_))));
        assert!(ols_fit(&record(vec![1.0, 2.0], vec![1.0, 2.0])).is_err());
    }
}
