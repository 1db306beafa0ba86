use thiserror::Error;

/// Errors produced by the error-model library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// `|R - 1| * N_s >= 1`: the pulse train no longer holds exactly `N_s`
    /// pulses per PPS interval.
    #[error(
        "N_s pulse-count approximation invalid: |R-1|*N_s = {product:.6} >= 1 \
         (R = {ratio}, N_s = {samples}); the absolute deviation must stay below one time-base period"
    )]
    PulseCountGuard {
        ratio: f64,
        samples: usize,
        product: f64,
    },

    #[error("regressor matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("unresolvable window: {samples} samples per window, at least 10 required")]
    UnresolvableWindow { samples: usize },

    #[error("waveform too short: spans {span_s} s, one estimation window needs {window_s} s")]
    WaveformTooShort { span_s: f64, window_s: f64 },

    #[error("reference phasor has zero magnitude")]
    ZeroReference,

    #[error("{kind} input is missing required columns: {}", .missing.join(", "))]
    Schema { kind: String, missing: Vec<String> },

    #[error("trial {trial} rejected ({draw}): {source}")]
    TrialRejected {
        trial: usize,
        draw: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True when the error (or the error wrapped by a rejected trial) is a
    /// violation of the pulse-count guard.
    pub fn is_guard_violation(&self) -> bool {
        match self {
            Error::PulseCountGuard { .. } => true,
            Error::TrialRejected { source, .. } => source.is_guard_violation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
