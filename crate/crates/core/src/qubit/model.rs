use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Operating frequency of the monitored qubit, Hz.
pub const DEFAULT_OPERATING_HZ: f64 = 3.8e9;
/// |df/dV| at the operating point, Hz/V.
pub const DEFAULT_SENSITIVITY: f64 = 1.6e10;

/// Symmetric transmon with `f = f_max * sqrt|cos(pi (v - v_offset) / v_period)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitModel {
    pub f_max: f64,
    /// Volts per flux quantum.
    pub v_period: f64,
    pub v_offset: f64,
    pub t1: f64,
    pub t2_ramsey: f64,
    pub t2_echo: f64,
    /// Exponent of the echo decay.
    #[serde(default = "one")]
    pub echo_stretch: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for QubitModel {
    /// 4.8 GHz maximum, period chosen so 3.8 GHz sits at 1.6e10 Hz/V.
    fn default() -> Self {
        let f_max = 4.8e9;
        Self {
            f_max,
            v_period: Self::period_for(f_max, DEFAULT_OPERATING_HZ, DEFAULT_SENSITIVITY),
            v_offset: 0.0,
            t1: 87.6e-6,
            t2_ramsey: 5.1e-6,
            t2_echo: 23.5e-6,
            echo_stretch: 1.0,
        }
    }
}

impl QubitModel {
    /// Flux period that gives slope `sensitivity` where the frequency is
    /// `f_op`.
    pub fn period_for(f_max: f64, f_op: f64, sensitivity: f64) -> f64 {
        let c = (f_op / f_max).powi(2);
        f_max * PI * (1.0 - c * c).sqrt() / (2.0 * c.sqrt() * sensitivity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_max > 0.0 && self.v_period > 0.0) {
            return Err(Error::Config("f_max and v_period must be positive".into()));
        }
        if !(self.t1 > 0.0 && self.t2_ramsey > 0.0 && self.t2_echo > 0.0 && self.echo_stretch > 0.0)
        {
            return Err(Error::Config("coherence times must be positive".into()));
        }
        if self.t2_echo < self.t2_ramsey {
            return Err(Error::Config("t2_echo must be >= t2_ramsey".into()));
        }
        if self.t2_ramsey > 2.0 * self.t1 {
            log::warn!(
                "t2_ramsey {} exceeds 2 t1 {}; unphysical but accepted",
                self.t2_ramsey,
                2.0 * self.t1
            );
        }
        Ok(())
    }

    fn phase(&self, v: f64) -> f64 {
        PI * (v - self.v_offset) / self.v_period
    }

    pub fn frequency(&self, v: f64) -> f64 {
        self.f_max * self.phase(v).cos().abs().sqrt()
    }

    /// df/dV, Hz/V.
    pub fn sensitivity(&self, v: f64) -> Result<f64> {
        let th = self.phase(v);
        let c = th.cos();
        if c.abs() < 1e-12 {
            return Err(Error::Domain(format!("flux map is singular at {v} V")));
        }
        Ok(-self.f_max * c.signum() * th.sin() * PI / (self.v_period * 2.0 * c.abs().sqrt()))
    }

    /// Bias on the first downward slope above `v_offset` where the
    /// frequency equals `f`.
    pub fn operating_bias(&self, f: f64) -> Result<f64> {
        if !(f > 0.0 && f < self.f_max) {
            return Err(Error::Domain(format!(
                "operating frequency {f} must lie in (0, f_max)"
            )));
        }
        Ok(self.v_offset + self.v_period * (f / self.f_max).powi(2).acos() / PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_period() -> QubitModel {
        QubitModel {
            v_period: 1.0,
            ..QubitModel::default()
        }
    }

    #[test]
    fn sweet_spot_and_quarter_period() {
        let m = unit_period();
        assert_eq!(m.frequency(0.0), 4.8e9);
        assert!((m.frequency(0.25) / 4.036_3e9 - 1.0).abs() < 2e-5);
        assert!(m.frequency(0.5) < 1e-6 * m.f_max);
        assert_eq!(m.sensitivity(0.0).unwrap(), 0.0);
        assert!(m.sensitivity(0.5).is_err());
    }

    #[test]
    fn default_operating_point() {
        let m = QubitModel::default();
        let v = m.operating_bias(DEFAULT_OPERATING_HZ).unwrap();
        assert!((m.frequency(v) / DEFAULT_OPERATING_HZ - 1.0).abs() < 1e-12);
        assert!((m.sensitivity(v).unwrap().abs() / DEFAULT_SENSITIVITY - 1.0).abs() < 1e-12);
        assert!((m.v_period - 0.4638).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_model() {
        let mut m = QubitModel::default();
        m.t2_echo = 1e-6;
        assert!(m.validate().is_err());
        assert!(QubitModel::default().validate().is_ok());
    }
}
