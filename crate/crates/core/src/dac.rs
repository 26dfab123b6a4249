//! 20-bit DAC code law, quantizer and reference arithmetic.
//!
//! The output voltage for code `d` is
//! `(v_refp - v_refn) * d / (2^20 - 1) + v_refn`. It is evaluated as the
//! weighted sum `(v_refp * d + v_refn * (max - d)) / max`, which is a single
//! correctly rounded division whenever the references are short binary
//! fractions (e.g. +-7 V), and the two endpoints are returned verbatim.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DAC_BITS: u32 = 20;
/// Largest code, `2^20 - 1`.
pub const MAX_CODE: u32 = (1 << DAC_BITS) - 1;

/// Reference voltages of the DAC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DacTransfer {
    pub v_refp: f64,
    pub v_refn: f64,
    #[serde(default = "default_bits")]
    pub bits: u32,
}

fn default_bits() -> u32 {
    DAC_BITS
}

impl Default for DacTransfer {
    fn default() -> Self {
        Self::symmetric(7.0)
    }
}

impl DacTransfer {
    pub fn new(v_refp: f64, v_refn: f64) -> Result<Self> {
        let cfg = Self {
            v_refp,
            v_refn,
            bits: DAC_BITS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `+-v` references.
    pub fn symmetric(v: f64) -> Self {
        Self {
            v_refp: v,
            v_refn: -v,
            bits: DAC_BITS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_refp.is_finite() && self.v_refn.is_finite()) {
            return Err(Error::Config("DAC references must be finite".into()));
        }
        if self.v_refp <= self.v_refn {
            return Err(Error::Config(format!(
                "v_refp ({}) must exceed v_refn ({})",
                self.v_refp, self.v_refn
            )));
        }
        if self.bits != DAC_BITS {
            return Err(Error::Config(format!(
                "only {DAC_BITS}-bit DACs are modeled, got {}",
                self.bits
            )));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.v_refp - self.v_refn
    }

    /// Voltage step between adjacent codes.
    pub fn lsb(&self) -> f64 {
        self.span() / MAX_CODE as f64
    }

    pub fn code_to_voltage(&self, code: u32) -> Result<f64> {
        match code {
            0 => Ok(self.v_refn),
            MAX_CODE => Ok(self.v_refp),
            c if c < MAX_CODE => {
                let d = c as f64;
                let m = MAX_CODE as f64;
                Ok((self.v_refp * d + self.v_refn * (m - d)) / m)
            }
            c => Err(Error::Range(format!("DAC code {c} exceeds {MAX_CODE}"))),
        }
    }

    /// Nearest code to `v`; exact half-LSB ties go to the even code.
    pub fn voltage_to_code(&self, v: f64) -> Result<u32> {
        if !v.is_finite() || v < self.v_refn || v > self.v_refp {
            return Err(Error::Range(format!(
                "{v} V outside DAC span [{}, {}]",
                self.v_refn, self.v_refp
            )));
        }
        let pos = (v - self.v_refn) / self.span() * MAX_CODE as f64;
        let lo = (pos.floor() as u32).min(MAX_CODE);
        let hi = (lo + 1).min(MAX_CODE);
        if lo == hi {
            return Ok(lo);
        }
        // Decide between the two bracketing codes on the voltages they
        // actually produce, so the round trip is exact.
        let err_lo = (self.code_to_voltage(lo)? - v).abs();
        let err_hi = (self.code_to_voltage(hi)? - v).abs();
        let code = if err_lo < err_hi {
            lo
        } else if err_hi < err_lo {
            hi
        } else if lo % 2 == 0 {
            lo
        } else {
            hi
        };
        Ok(code)
    }

    /// Voltage actually produced when `v` is requested.
    pub fn quantize(&self, v: f64) -> Result<f64> {
        self.code_to_voltage(self.voltage_to_code(v)?)
    }
}

/// Buried-zener reference (LTZ1000-class) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceModel {
    pub nominal: f64,
    /// Temperature coefficient in ppm/degC.
    pub tempco_ppm: f64,
    /// Flat voltage noise density, V/sqrt(Hz).
    pub asd: f64,
}

impl Default for ReferenceModel {
    fn default() -> Self {
        Self {
            nominal: 7.2,
            tempco_ppm: 0.05,
            asd: 1.2e-6,
        }
    }
}

impl ReferenceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tempco_ppm >= 0.0 && self.asd >= 0.0) {
            return Err(Error::Config(
                "reference tempco and noise density must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Reference voltage change for a temperature step of `delta_t` degC.
    pub fn shift(&self, delta_t: f64) -> f64 {
        self.nominal * self.tempco_ppm * 1e-6 * delta_t
    }
}

/// Per-channel output limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub i_max: f64,
}

impl Default for ChannelLimits {
    fn default() -> Self {
        Self {
            v_min: -7.0,
            v_max: 7.0,
            i_max: 0.2,
        }
    }
}

impl ChannelLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_min < self.v_max) {
            return Err(Error::Config("v_min must be below v_max".into()));
        }
        if !(self.i_max > 0.0 && self.i_max.is_finite()) {
            return Err(Error::Config("i_max must be positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.v_min && v <= self.v_max
    }
}
