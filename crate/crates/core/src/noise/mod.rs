//! Reproducible noise, drift and crosstalk signals.

mod asd;
mod crosstalk;
mod drift;
mod synth;
pub(crate) mod trace;

pub use asd::{dbm_to_peak_volts, AsdModel, Spur, WhiteSegment};
pub use crosstalk::CrosstalkModel;
pub use drift::{synthesize_drift, DriftModel, OuState};
pub use synth::synthesize_noise;
pub use trace::Trace;
