//! Behavioral twin of a dual-channel, 20-bit precision DC source for
//! superconducting-qubit biasing.
//!
//! The crate is organized bottom-up:
//!
//! - [`dac`]: the DAC code law, its quantizer and reference drift.
//! - [`analog`]: open-loop Bode response, stability margins, lead
//!   compensation tuning and the supply-chain noise budget.
//! - [`noise`]: reproducible colored noise, OU drift and crosstalk.
//! - [`metrology`]: the bench measurement pipelines (ripple, RMS, spectra,
//!   drift, crosstalk protocol).
//! - [`twin`]: the two-channel instrument state machine, its line protocol,
//!   TCP service and persistence.
//! - [`qubit`]: flux-tunable qubit model, coherence fits and the long-term
//!   Ramsey monitor.
//! - [`bench`]: the end-to-end benchmark runners shared by the CLI and the
//!   acceptance suite.
//!
//! Monte Carlo loops and per-segment spectral work go through [`par`], which
//! uses rayon when the `parallel` feature is enabled (the default) and plain
//! iterators otherwise. Results are identical either way.

pub mod analog;
pub mod bench;
pub mod dac;
mod error;
pub mod metrology;
pub mod noise;
pub mod par;
pub mod qubit;
pub mod twin;

pub use error::{Error, Result};
