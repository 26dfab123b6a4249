//! Bench measurement pipelines over [`Trace`](crate::noise::Trace)s.

mod bandlimit;
mod crosstalk;
mod floors;
mod spectrum;
mod stats;

pub use bandlimit::{bandlimit, BANDLIMIT_ORDER};
pub use crosstalk::{
    run_crosstalk_protocol, CrosstalkResult, CrosstalkSweep, MIN_SAMPLES_PER_POINT,
};
pub use floors::{add_white_noise, MeasurementFloors, RIPPLE_CREST_FACTOR};
pub use spectrum::{spectrum_dbm, welch_asd, PowerSpectrum, SpectrumEstimate};
pub use stats::{peak_to_peak, rms};

/// JSON record emitted by the benches.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchRecord {
    pub metric: String,
    pub value: f64,
    pub unit: String,
    pub config: serde_json::Value,
    pub seed: u64,
}
