use serde::{Deserialize, Serialize};

use super::UPDATE_INTERVAL_S;
use crate::dac::{ChannelLimits, DacTransfer};
use crate::noise::OuState;
use crate::{Error, Result};

/// Output channel number, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Channel(u8);

impl Channel {
    pub const ONE: Channel = Channel(1);
    pub const TWO: Channel = Channel(2);

    pub fn new(n: u8) -> Result<Self> {
        match n {
            1 | 2 => Ok(Channel(n)),
            _ => Err(Error::Domain(format!("no channel {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn other(self) -> Channel {
        Channel(3 - self.0)
    }
}

impl TryFrom<u8> for Channel {
    type Error = Error;
    fn try_from(n: u8) -> Result<Self> {
        Channel::new(n)
    }
}

impl From<Channel> for u8 {
    fn from(c: Channel) -> u8 {
        c.0
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    CV,
    CC,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::CV => "CV",
            Mode::CC => "CC",
        })
    }
}

/// Output voltage and mode once the current limit is applied to a
/// `setpoint` driving `load_ohms` (`None` is an open circuit).
///
/// In CC the magnitude is the largest double with `|v| / R <= i_max`.
pub fn current_limit(limits: &ChannelLimits, setpoint: f64, load_ohms: Option<f64>) -> (f64, Mode) {
    match load_ohms {
        Some(r) if setpoint.abs() / r > limits.i_max => {
            let mut v = limits.i_max * r;
            while v / r > limits.i_max {
                v = v.next_down();
            }
            (v.copysign(setpoint), Mode::CC)
        }
        _ => (setpoint, Mode::CV),
    }
}

/// Linear setpoint ramp in 1 ms updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampPlan {
    pub start_v: f64,
    pub target_v: f64,
    /// V/s.
    pub rate: f64,
    pub steps: usize,
}

impl RampPlan {
    pub fn new(start_v: f64, target_v: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Range(format!(
                "ramp rate must be positive, got {rate}"
            )));
        }
        let dv = (target_v - start_v).abs();
        let steps = if dv == 0.0 {
            0
        } else {
            (dv / (rate * UPDATE_INTERVAL_S) - 1e-9).ceil().max(1.0) as usize
        };
        Ok(Self {
            start_v,
            target_v,
            rate,
            steps,
        })
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * UPDATE_INTERVAL_S
    }

    /// Unquantized setpoint after update `k` (1-based); the last update
    /// lands on the target.
    pub fn raw_setpoint(&self, k: usize) -> f64 {
        if k >= self.steps {
            return self.target_v;
        }
        let dir = (self.target_v - self.start_v).signum();
        self.start_v + dir * self.rate * UPDATE_INTERVAL_S * k as f64
    }

    /// Quantized setpoints of every update.
    pub fn setpoints(&self, dac: &DacTransfer) -> Result<Vec<f64>> {
        (1..=self.steps)
            .map(|k| dac.quantize(self.raw_setpoint(k)))
            .collect()
    }
}

/// Ramp in progress on the real-time clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveRamp {
    pub plan: RampPlan,
    /// Uptime of the ramp start, s.
    pub started: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub code: u32,
    /// Quantized setpoint, `code_to_voltage(code)`.
    pub setpoint_v: f64,
    /// Output after the current limit.
    pub applied_v: f64,
    pub mode: Mode,
    /// Test-harness load; `None` is open circuit.
    pub load_ohms: Option<f64>,
    pub drift: OuState,
    pub seed: u64,
    #[serde(default)]
    pub ramp: Option<ActiveRamp>,
}

/// Reply to `STAT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStatus {
    pub mode: Mode,
    pub applied_v: f64,
    /// Estimated load current, A.
    pub current_a: f64,
}

impl ChannelState {
    pub fn current(&self) -> f64 {
        self.load_ohms.map_or(0.0, |r| self.applied_v / r)
    }

    pub fn status(&self) -> ChannelStatus {
        ChannelStatus {
            mode: self.mode,
            applied_v: self.applied_v,
            current_a: self.current(),
        }
    }

    /// Moves to `code` and re-evaluates the current limit.
    pub(crate) fn apply_code(
        &mut self,
        dac: &DacTransfer,
        limits: &ChannelLimits,
        code: u32,
    ) -> Result<()> {
        self.code = code;
        self.setpoint_v = dac.code_to_voltage(code)?;
        self.refresh(limits);
        Ok(())
    }

    pub(crate) fn refresh(&mut self, limits: &ChannelLimits) {
        let (v, mode) = current_limit(limits, self.setpoint_v, self.load_ohms);
        self.applied_v = v;
        self.mode = mode;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_numbers() {
        assert!(Channel::new(0).is_err());
        assert!(Channel::new(3).is_err());
        assert_eq!(Channel::ONE.other(), Channel::TWO);
        assert_eq!(Channel::TWO.index(), 1);
    }

    #[test]
    fn cc_clamp() {
        let lim = ChannelLimits::default();
        let (v, m) = current_limit(&lim, 7.0, Some(10.0));
        assert_eq!(m, Mode::CC);
        assert_eq!(v, 2.0);
        let (v, m) = current_limit(&lim, -7.0, Some(10.0));
        assert_eq!((v, m), (-2.0, Mode::CC));
        assert_eq!(current_limit(&lim, 7.0, None), (7.0, Mode::CV));
        assert_eq!(current_limit(&lim, 1.0, Some(10.0)), (1.0, Mode::CV));
    }

    #[test]
    fn ramp_steps() {
        let p = RampPlan::new(0.0, 1.0, 10.0).unwrap();
        assert_eq!(p.steps, 100);
        assert!((p.duration() - 0.1).abs() < 1e-12);
        let p = RampPlan::new(0.0, -7.0, 1.0).unwrap();
        assert_eq!(p.steps, 7000);
        assert_eq!(RampPlan::new(2.0, 2.0, 1.0).unwrap().steps, 0);
        assert!(RampPlan::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ramp_setpoints_monotone() {
        let dac = DacTransfer::default();
        let s = RampPlan::new(0.0, -7.0, 1.0)
            .unwrap()
            .setpoints(&dac)
            .unwrap();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*s.last().unwrap(), -7.0);
    }
}
