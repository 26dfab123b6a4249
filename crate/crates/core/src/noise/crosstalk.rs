use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Linear channel-to-channel coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkModel {
    /// Victim volts per aggressor volt.
    pub kappa: f64,
}

/// Default coupling, 0.2 ppm.
pub const DEFAULT_KAPPA: f64 = 0.2e-6;

impl Default for CrosstalkModel {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl CrosstalkModel {
    pub fn new(kappa: f64) -> Result<Self> {
        let m = Self { kappa };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.abs() < 1e-3) {
            return Err(Error::Config(format!(
                "crosstalk coupling {} must satisfy |kappa| < 1e-3",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Victim deviation caused by an aggressor step.
    pub fn delta(&self, aggressor_change: f64) -> f64 {
        self.kappa * aggressor_change
    }
}
