use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Trace;
use crate::{Error, Result};

/// Zero-mean Ornstein-Uhlenbeck drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    /// Stationary standard deviation, V.
    pub sigma: f64,
    /// Correlation time, s.
    pub tau: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            sigma: 0.7e-6,
            tau: 3600.0,
        }
    }
}

impl DriftModel {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        let m = Self { sigma, tau };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("drift sigma must be >= 0".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(
                "drift correlation time must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Exact one-step transition over `dt` seconds given a unit normal.
    pub fn step(&self, x: f64, dt: f64, xi: f64) -> f64 {
        let a = (-dt / self.tau).exp();
        // 1 - a^2 computed without cancellation for small dt.
        let spread = (-(-2.0 * dt / self.tau).exp_m1()).sqrt();
        x * a + self.sigma * spread * xi
    }

    /// Draw from the stationary distribution.
    pub fn stationary<R: Rng>(&self, rng: &mut R) -> f64 {
        self.sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Drift process value `x` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuState {
    pub x: f64,
    pub t: f64,
}

impl OuState {
    /// Evolves the state exactly to `t_next` (no-op if not later).
    pub fn advance_to<R: Rng>(&mut self, model: &DriftModel, t_next: f64, rng: &mut R) {
        if t_next > self.t {
            let xi = rng.sample::<f64, _>(StandardNormal);
            self.x = model.step(self.x, t_next - self.t, xi);
            self.t = t_next;
        }
    }

    /// Samples the path at `t_start + i / fs` for `i in 0..n`, leaving the
    /// state at the last sample.
    pub fn sample_path<R: Rng>(
        &mut self,
        model: &DriftModel,
        t_start: f64,
        fs: f64,
        n: usize,
        rng: &mut R,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        self.advance_to(model, t_start, rng);
        for i in 0..n {
            if i > 0 {
                self.advance_to(model, t_start + i as f64 / fs, rng);
            }
            out.push(self.x);
        }
        out
    }
}

/// OU path of `floor(duration / dt)` samples spaced `dt`, starting from the
/// stationary distribution.
pub fn synthesize_drift(model: &DriftModel, duration: f64, dt: f64, seed: u64) -> Result<Trace> {
    model.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !(duration >= dt) {
        return Err(Error::Domain(format!(
            "duration {duration} s shorter than one step of {dt} s"
        )));
    }
    let n = (duration / dt * (1.0 + 1e-12)).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = model.stationary(&mut rng);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(x);
        x = model.step(x, dt, rng.sample(StandardNormal));
    }
    Trace::new(1.0 / dt, 0.0, samples)
}
