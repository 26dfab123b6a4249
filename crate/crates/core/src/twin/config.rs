use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dac::{ChannelLimits, DacTransfer};
use crate::noise::{AsdModel, CrosstalkModel, DriftModel};
use crate::{Error, Result};

/// Everything needed to build an [`InstrumentState`](super::InstrumentState).
///
/// Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwinConfig {
    pub dac: DacTransfer,
    pub limits: ChannelLimits,
    pub noise: AsdModel,
    pub drift: DriftModel,
    pub crosstalk: CrosstalkModel,
    /// Setpoint-proportional noise: rms added in quadrature per volt.
    pub rms_alpha: f64,
    /// Band over which `rms_alpha` is referenced, Hz.
    pub rms_band_hz: f64,
    /// Per-channel load in ohms, `null` for open circuit.
    pub load_ohms: [Option<f64>; 2],
    pub seed: u64,
}

/// Default setpoint-proportional coefficient.
pub const DEFAULT_RMS_ALPHA: f64 = 45.4e-6;

impl Default for TwinConfig {
    fn default() -> Self {
        Self {
            dac: DacTransfer::default(),
            limits: ChannelLimits::default(),
            noise: AsdModel::default(),
            drift: DriftModel::default(),
            crosstalk: CrosstalkModel::default(),
            rms_alpha: DEFAULT_RMS_ALPHA,
            rms_band_hz: 20e6,
            load_ohms: [None, None],
            seed: 0,
        }
    }
}

impl TwinConfig {
    /// Noiseless, driftless, uncoupled twin.
    pub fn quiet() -> Self {
        Self {
            noise: AsdModel::zero(),
            drift: DriftModel {
                sigma: 0.0,
                ..DriftModel::default()
            },
            crosstalk: CrosstalkModel { kappa: 0.0 },
            rms_alpha: 0.0,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.dac.validate()?;
        self.limits.validate()?;
        self.noise.validate()?;
        self.drift.validate()?;
        self.crosstalk.validate()?;
        if self.limits.v_min < self.dac.v_refn || self.limits.v_max > self.dac.v_refp {
            return Err(Error::Config(
                "voltage limits exceed the DAC reference span".into(),
            ));
        }
        if !(self.rms_alpha >= 0.0 && self.rms_alpha.is_finite()) {
            return Err(Error::Config("rms_alpha must be >= 0".into()));
        }
        if !(self.rms_band_hz > 0.0) {
            return Err(Error::Config("rms_band_hz must be positive".into()));
        }
        for r in self.load_ohms.iter().flatten() {
            if !(*r > 0.0) {
                return Err(Error::Config(format!("load must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = TwinConfig::from_json(r#"{"seed": 9, "load_ohms": [10.0, null]}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.load_ohms, [Some(10.0), None]);
        assert_eq!(cfg.rms_alpha, DEFAULT_RMS_ALPHA);
    }

    #[test]
    fn round_trip() {
        let cfg = TwinConfig::default().with_seed(4);
        assert_eq!(TwinConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TwinConfig::from_json(r#"{"load_ohms": [0.0, null]}"#).is_err());
        assert!(
            TwinConfig::from_json(r#"{"limits": {"v_min": -8, "v_max": 7, "i_max": 0.2}}"#)
                .is_err()
        );
        assert!(TwinConfig::from_json("{").is_err());
    }
}
