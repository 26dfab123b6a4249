use std::path::Path;

use serde::{Deserialize, Serialize};

use super::channel::ChannelState;
use super::state::{Clock, InstrumentState};
use super::TwinConfig;
use crate::dac::MAX_CODE;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of an [`InstrumentState`]: configuration, seeds, drift and
/// channel state, uptime and the measurement counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub config: TwinConfig,
    pub channels: [ChannelState; 2],
    pub uptime: f64,
    pub meas_index: u64,
}

impl Snapshot {
    pub fn of(state: &InstrumentState) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: state.config.clone(),
            channels: state.channels.clone(),
            uptime: state.uptime,
            meas_index: state.meas_index,
        }
    }

    /// Writes via a temporary file and a rename, so a failed write never
    /// leaves a truncated snapshot behind.
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("snapshot serializes");
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("snapshot JSON: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "snapshot schema {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Schema("snapshot lacks schema_version".into())),
        }
        let snap: Self =
            serde_json::from_value(value).map_err(|e| Error::Schema(format!("snapshot: {e}")))?;
        snap.check()?;
        Ok(snap)
    }

    fn check(&self) -> Result<()> {
        self.config
            .validate()
            .map_err(|e| Error::Schema(e.to_string()))?;
        for ch in &self.channels {
            if ch.code > MAX_CODE || self.config.dac.code_to_voltage(ch.code)? != ch.setpoint_v {
                return Err(Error::Schema("channel code and setpoint disagree".into()));
            }
        }
        if !(self.uptime >= 0.0 && self.uptime.is_finite()) {
            return Err(Error::Schema("uptime must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn into_state(self) -> Result<InstrumentState> {
        self.check()?;
        let mut st = InstrumentState {
            config: self.config,
            channels: self.channels,
            uptime: self.uptime,
            meas_index: self.meas_index,
            clock: Clock::Simulated,
        };
        let limits = st.config.limits;
        for ch in &mut st.channels {
            ch.refresh(&limits);
        }
        Ok(st)
    }
}
