//! Blocks of the acquisition chain and their error models.

pub mod aaf;
pub mod acquire;
pub mod adc;
pub mod block;
pub mod model;
pub mod pll;
pub mod timebase;

pub use aaf::{aaf_response, AafModel};
pub use acquire::{acquire, draw_schedule, Acquisition};
pub use adc::{adc_quantize, adc_response, AdcModel, AdcSample, AdcStatistics};
pub use block::{combined_response, BlockResponse, Combination};
pub use model::{ChainInstance, ChainModel};
pub use pll::{pll_response, pll_sample, DelayFamily, DelayHistogram, PllDelayModel};
pub use timebase::{timebase_response, TemperaturePoint, TimebaseModel};
