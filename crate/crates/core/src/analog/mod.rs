//! Linear AC model of the buffer + power-amplifier loop and the supply-chain
//! noise budget.

mod budget;
mod compensation;
mod filter;
mod transfer;

pub use budget::{chain_output_asd, NoiseStage, SupplyRejection};
pub use compensation::{
    apply_compensation, tune_compensation, CompensationParams, PM_TOLERANCE_DEG, SEARCH_MAX_HZ,
    SEARCH_MIN_HZ, UGBW_TOLERANCE,
};
pub use filter::{butterworth_attenuation, butterworth_gain};
pub use transfer::{PoleZeroGain, Response, StabilityReport};

/// Open-loop DC gain of the canonical loop, 110 dB.
pub const CANONICAL_DC_GAIN_DB: f64 = 110.0;
/// Fixed non-dominant pole of the canonical loop, Hz.
pub const CANONICAL_THIRD_POLE_HZ: f64 = 80e6;
/// First two poles (Hz), solved so the uncompensated loop crosses unity at
/// 5.95 MHz with 18.1 degrees of margin.
pub const CANONICAL_FITTED_POLES_HZ: [f64; 2] = [49.610_522_898_228_83, 2_446_712.788_541_193_6];

/// Uncompensated loop targets.
pub const UNCOMPENSATED_UGBW_HZ: f64 = 5.95e6;
pub const UNCOMPENSATED_PM_DEG: f64 = 18.1;
/// Compensated loop targets.
pub const COMPENSATED_UGBW_HZ: f64 = 8.12e6;
pub const COMPENSATED_PM_DEG: f64 = 64.8;

/// Three-pole model of the uncompensated output loop.
pub fn canonical_open_loop() -> PoleZeroGain {
    PoleZeroGain {
        dc_gain: 10f64.powf(CANONICAL_DC_GAIN_DB / 20.0),
        poles: vec![
            CANONICAL_FITTED_POLES_HZ[0],
            CANONICAL_FITTED_POLES_HZ[1],
            CANONICAL_THIRD_POLE_HZ,
        ],
        zeros: vec![],
    }
}

/// Default order of the post-regulator low-pass (first order reproduces
/// ~20 dB one decade above a 100 Hz cutoff).
pub const SUPPLY_FILTER_ORDER: u32 = 1;
pub const SUPPLY_FILTER_CUTOFF_HZ: f64 = 100.0;
