use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::QubitModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceKind {
    T1,
    Ramsey,
    Echo,
}

/// Excited-state population after delay `t`.
pub fn coherence_population(
    kind: CoherenceKind,
    t: f64,
    model: &QubitModel,
    detuning_hz: f64,
    phase: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("delay must be >= 0, got {t}")));
    }
    Ok(match kind {
        CoherenceKind::T1 => (-t / model.t1).exp(),
        CoherenceKind::Ramsey => {
            0.5 * (1.0 + (-t / model.t2_ramsey).exp() * (TAU * detuning_hz * t + phase).cos())
        }
        CoherenceKind::Echo => 0.5 * (1.0 + (-(t / model.t2_echo).powf(model.echo_stretch)).exp()),
    })
}
