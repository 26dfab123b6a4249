use serde::{Deserialize, Serialize};

use crate::twin::{Channel, Instrument};
use crate::{Error, Result};

/// Per-point averaging floor.
pub const MIN_SAMPLES_PER_POINT: usize = 1000;

/// Aggressor sweep settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkSweep {
    pub aggressor: Channel,
    pub victim: Channel,
    pub v_start: f64,
    pub v_stop: f64,
    pub step: f64,
    /// Victim acquisition rate, Hz.
    pub fs: f64,
    pub samples_per_point: usize,
}

impl CrosstalkSweep {
    pub fn new(aggressor: Channel, victim: Channel, v_start: f64, v_stop: f64, step: f64) -> Self {
        Self {
            aggressor,
            victim,
            v_start,
            v_stop,
            step,
            fs: 1e6,
            samples_per_point: MIN_SAMPLES_PER_POINT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.aggressor == self.victim {
            return Err(Error::Domain("aggressor and victim must differ".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Domain(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.samples_per_point < MIN_SAMPLES_PER_POINT {
            return Err(Error::Domain(format!(
                "need at least {MIN_SAMPLES_PER_POINT} samples per point"
            )));
        }
        Ok(())
    }

    /// Aggressor setpoints from `v_start` toward `v_stop`.
    pub fn setpoints(&self) -> Vec<f64> {
        let span = self.v_stop - self.v_start;
        let count = (span.abs() / self.step + 1e-9).floor() as usize + 1;
        let dir = span.signum();
        (0..count)
            .map(|i| self.v_start + dir * i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkResult {
    pub victim_pkpk: f64,
    pub kappa_est: f64,
    /// Standard error of `kappa_est`.
    pub kappa_stderr: f64,
    pub residual_rms: f64,
    /// Applied aggressor voltages.
    pub aggressor_v: Vec<f64>,
    /// Mean victim reading at each point.
    pub victim_v: Vec<f64>,
}

/// Sweeps the aggressor, averages the victim at each point, and fits the
/// victim-vs-aggressor slope. The aggressor is restored afterwards.
pub fn run_crosstalk_protocol<I: Instrument + ?Sized>(
    inst: &mut I,
    sweep: &CrosstalkSweep,
) -> Result<CrosstalkResult> {
    sweep.validate()?;
    let original = inst.get_voltage(sweep.aggressor)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for v in sweep.setpoints() {
        xs.push(inst.set_voltage(sweep.aggressor, v)?);
        let tr = inst.measure(sweep.victim, sweep.fs, sweep.samples_per_point)?;
        ys.push(tr.mean());
    }
    inst.set_voltage(sweep.aggressor, original)?;

    let n = xs.len() as f64;
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    let (kappa_est, kappa_stderr, residual_rms) = if xs.len() >= 3 {
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let slope = sxy / sxx;
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - ym - slope * (x - xm)).powi(2))
            .sum();
        (slope, (ssr / (n - 2.0) / sxx).sqrt(), (ssr / n).sqrt())
    } else {
        return Err(Error::Domain(
            "crosstalk sweep needs at least 3 points".into(),
        ));
    };
    Ok(CrosstalkResult {
        victim_pkpk: hi - lo,
        kappa_est,
        kappa_stderr,
        residual_rms,
        aggressor_v: xs,
        victim_v: ys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setpoints_cover_both_directions() {
        let c1 = Channel::new(1).unwrap();
        let c2 = Channel::new(2).unwrap();
        let up = CrosstalkSweep::new(c1, c2, -7.0, 7.0, 0.1).setpoints();
        assert_eq!(up.len(), 141);
        assert!((up[140] - 7.0).abs() < 1e-9);
        let down = CrosstalkSweep::new(c1, c2, 7.0, -7.0, 0.1).setpoints();
        assert!((down[140] + 7.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_sweeps() {
        let c1 = Channel::new(1).unwrap();
        assert!(CrosstalkSweep::new(c1, c1, 0.0, 1.0, 0.1)
            .validate()
            .is_err());
        let c2 = Channel::new(2).unwrap();
        assert!(CrosstalkSweep::new(c1, c2, 0.0, 1.0, 0.0)
            .validate()
            .is_err());
    }
}
