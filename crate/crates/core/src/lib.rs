//! Error model of a phasor measurement unit built on a single-board computer.
//!
//! The acquisition chain is split into four blocks: an RC anti-aliasing
//! filter, the ADC, the PWM time base and the software PLL that restarts the
//! time base at every PPS edge. Each block contributes a magnitude and phase
//! error to the estimated phasor. [`chain`] models the blocks and simulates
//! acquisition, [`estimation`] computes dynamic phasors and TVE,
//! [`characterization`] recovers block parameters from raw measurements and
//! [`uncertainty`] propagates the parameter spreads to the phasor.

pub mod chain;
pub mod characterization;
pub mod error;
pub mod estimation;
pub mod signal;
pub mod uncertainty;

pub use error::{Error, Result};
pub use signal::{build_schedule, ideal_envelope, synthesize, ComplexEnvelope, Phasor, SamplingSchedule, Waveform};
