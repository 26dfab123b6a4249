use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::channel::{ActiveRamp, Channel, ChannelState, ChannelStatus, Mode, RampPlan};
use super::persist::Snapshot;
use super::protocol::{self, Command, ProtocolError};
use super::{TwinConfig, IDN, MAX_MEAS_SAMPLES, UPDATE_INTERVAL_S};
use crate::noise::{synthesize_noise, AsdModel, OuState, Trace};
use crate::par::mix_seed;
use crate::{Error, Result};

/// How instrument uptime advances.
#[derive(Debug, Clone, Copy)]
pub enum Clock {
    /// Uptime moves only with measurements and ramps, which complete
    /// instantly. Twelve simulated hours take as long as the synthesis.
    Simulated,
    /// Uptime follows the wall clock (and never runs behind measurements).
    RealTime { origin: Instant, base: f64 },
}

impl Clock {
    pub fn real_time() -> Self {
        Clock::RealTime {
            origin: Instant::now(),
            base: 0.0,
        }
    }
}

/// Result of a RAMP on the simulated clock, or its schedule on the real one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampCompletion {
    pub steps: usize,
    pub duration_s: f64,
}

/// Everything a measurement needs, captured under the state lock so the
/// synthesis can run elsewhere.
#[derive(Debug, Clone)]
pub struct MeasureJob {
    pub fs: f64,
    pub n: usize,
    pub t0: f64,
    /// Applied output plus the crosstalk contribution, V.
    pub base_v: f64,
    pub drift: Vec<f64>,
    pub noise: AsdModel,
    pub noise_seed: u64,
}

impl MeasureJob {
    pub fn run(&self) -> Result<Trace> {
        let mut samples = if self.noise.is_silent() {
            vec![0.0; self.n]
        } else {
            synthesize_noise(&self.noise, self.fs, self.n, self.noise_seed)?.samples
        };
        for (s, d) in samples.iter_mut().zip(&self.drift) {
            *s += self.base_v + d;
        }
        Trace::new(self.fs, self.t0, samples)
    }
}

/// Reply to one command line.
#[derive(Debug, Clone)]
pub enum Outcome {
    Reply(String),
    /// `MEAS` accepted; the reply is `OK n`, the samples and `END`.
    Measure(MeasureJob),
}

impl Outcome {
    /// Wire lines of the reply, synthesizing if needed.
    pub fn into_lines(self) -> Vec<String> {
        match self {
            Outcome::Reply(line) => vec![line],
            Outcome::Measure(job) => match job.run() {
                Ok(trace) => protocol::measurement_lines(&trace),
                Err(_) => vec![ProtocolError::Range.to_string()],
            },
        }
    }
}

/// The complete two-channel instrument.
#[derive(Debug, Clone)]
pub struct InstrumentState {
    pub(crate) config: TwinConfig,
    pub(crate) channels: [ChannelState; 2],
    pub(crate) uptime: f64,
    pub(crate) meas_index: u64,
    pub(crate) clock: Clock,
}

impl InstrumentState {
    /// Both channels at the code nearest 0 V, drift drawn from its
    /// stationary law, simulated clock.
    pub fn new(config: TwinConfig) -> Result<Self> {
        config.validate()?;
        let code = config.dac.voltage_to_code(0.0)?;
        let setpoint_v = config.dac.code_to_voltage(code)?;
        let mk = |i: usize| {
            let seed = mix_seed(config.seed, i as u64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX));
            let mut ch = ChannelState {
                code,
                setpoint_v,
                applied_v: setpoint_v,
                mode: Mode::CV,
                load_ohms: config.load_ohms[i],
                drift: OuState {
                    x: config.drift.stationary(&mut rng),
                    t: 0.0,
                },
                seed,
                ramp: None,
            };
            ch.refresh(&config.limits);
            ch
        };
        let channels = [mk(0), mk(1)];
        Ok(Self {
            config,
            channels,
            uptime: 0.0,
            meas_index: 0,
            clock: Clock::Simulated,
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = match clock {
            Clock::RealTime { origin, .. } => Clock::RealTime {
                origin,
                base: self.uptime,
            },
            c => c,
        };
        self
    }

    pub fn config(&self) -> &TwinConfig {
        &self.config
    }

    pub fn channel(&self, ch: Channel) -> &ChannelState {
        &self.channels[ch.index()]
    }

    pub fn uptime(&self) -> f64 {
        self.uptime
    }

    pub fn measurement_count(&self) -> u64 {
        self.meas_index
    }

    /// Brings uptime up to the wall clock and steps any active ramps.
    pub fn sync_clock(&mut self) {
        if let Clock::RealTime { origin, base } = self.clock {
            self.uptime = self.uptime.max(base + origin.elapsed().as_secs_f64());
        }
        let (dac, limits) = (self.config.dac, self.config.limits);
        for ch in &mut self.channels {
            let Some(r) = ch.ramp else { continue };
            let k = ((self.uptime - r.started) / UPDATE_INTERVAL_S + 1e-9).floor();
            if k < 1.0 {
                continue;
            }
            let k = k as usize;
            let v = r.plan.raw_setpoint(k);
            if let Ok(code) = dac.voltage_to_code(v) {
                let _ = ch.apply_code(&dac, &limits, code);
            }
            if k >= r.plan.steps {
                ch.ramp = None;
            }
        }
    }

    /// Advances uptime by `dt` seconds (simulated clock only; the real
    /// clock ignores it).
    pub fn advance(&mut self, dt: f64) {
        if matches!(self.clock, Clock::Simulated) && dt > 0.0 {
            self.uptime += dt;
        }
        self.sync_clock();
    }

    /// Rejects out-of-range requests, otherwise moves to the nearest code
    /// and returns the applied output. Cancels any ramp.
    pub fn set_voltage(&mut self, ch: Channel, v: f64) -> Result<f64> {
        self.sync_clock();
        if !self.config.limits.contains(v) {
            return Err(Error::Range(format!(
                "{v} V outside [{}, {}] V",
                self.config.limits.v_min, self.config.limits.v_max
            )));
        }
        let code = self.config.dac.voltage_to_code(v)?;
        let (dac, limits) = (self.config.dac, self.config.limits);
        let c = &mut self.channels[ch.index()];
        c.ramp = None;
        c.apply_code(&dac, &limits, code)?;
        Ok(c.applied_v)
    }

    pub fn get_voltage(&mut self, ch: Channel) -> f64 {
        self.sync_clock();
        self.channels[ch.index()].applied_v
    }

    pub fn status(&mut self, ch: Channel) -> ChannelStatus {
        self.sync_clock();
        self.channels[ch.index()].status()
    }

    pub fn set_load(&mut self, ch: Channel, load_ohms: Option<f64>) -> Result<()> {
        if let Some(r) = load_ohms {
            if !(r > 0.0) {
                return Err(Error::Range(format!("load must be positive, got {r}")));
            }
        }
        self.sync_clock();
        let limits = self.config.limits;
        let c = &mut self.channels[ch.index()];
        c.load_ohms = load_ohms;
        c.refresh(&limits);
        Ok(())
    }

    /// Ramps the setpoint to `target` at `rate` V/s in 1 ms updates. On the
    /// simulated clock the ramp runs to completion immediately and uptime
    /// advances by its duration.
    pub fn ramp(&mut self, ch: Channel, target: f64, rate: f64) -> Result<RampCompletion> {
        self.sync_clock();
        if !self.config.limits.contains(target) {
            return Err(Error::Range(format!("ramp target {target} V out of range")));
        }
        let start = self.channels[ch.index()].setpoint_v;
        let plan = RampPlan::new(start, self.config.dac.quantize(target)?, rate)?;
        let done = RampCompletion {
            steps: plan.steps,
            duration_s: plan.duration(),
        };
        match self.clock {
            Clock::Simulated => {
                self.set_voltage(ch, target)?;
                self.uptime += plan.duration();
            }
            Clock::RealTime { .. } => {
                if plan.steps == 0 {
                    self.set_voltage(ch, target)?;
                } else {
                    self.channels[ch.index()].ramp = Some(ActiveRamp {
                        plan,
                        started: self.uptime,
                    });
                }
            }
        }
        Ok(done)
    }

    /// Captures a measurement of `n` samples at `fs` starting now, and
    /// advances drift and uptime past it.
    pub fn plan_measurement(&mut self, ch: Channel, fs: f64, n: usize) -> Result<MeasureJob> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Range(format!(
                "sample rate must be positive, got {fs}"
            )));
        }
        if !(2..=MAX_MEAS_SAMPLES).contains(&n) {
            return Err(Error::Range(format!(
                "sample count must lie in [2, {MAX_MEAS_SAMPLES}], got {n}"
            )));
        }
        self.sync_clock();
        let t0 = self.uptime;
        let idx = self.meas_index;
        let other = self.channels[ch.other().index()].applied_v;
        let drift_model = self.config.drift;
        let scale = self.noise_scale(self.channels[ch.index()].applied_v);
        let c = &mut self.channels[ch.index()];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(c.seed, 2 * idx));
        let drift = c.drift.sample_path(&drift_model, t0, fs, n, &mut rng);
        let base_v = c.applied_v + self.config.crosstalk.delta(other);
        let noise_seed = mix_seed(c.seed, 2 * idx + 1);
        let noise = self.config.noise.scaled(scale);

        self.meas_index += 1;
        self.uptime = t0 + n as f64 / fs;
        Ok(MeasureJob {
            fs,
            n,
            t0,
            base_v,
            drift,
            noise,
            noise_seed,
        })
    }

    /// Amplitude factor applied to the device noise at output `v`, so the
    /// in-band rms is `sqrt(rms_band^2 + (alpha v)^2)`.
    pub fn noise_scale(&self, v: f64) -> f64 {
        let band = self.config.noise.band_rms(0.0, self.config.rms_band_hz);
        if band == 0.0 {
            return 1.0;
        }
        (1.0 + (self.config.rms_alpha * v / band).powi(2)).sqrt()
    }

    /// Applied output plus noise, drift and crosstalk.
    pub fn measure_trace(&mut self, ch: Channel, fs: f64, n: usize) -> Result<Trace> {
        self.plan_measurement(ch, fs, n)?.run()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::of(self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.snapshot().write(path)
    }

    /// Replaces this state with the one stored at `path`; on error the
    /// state is untouched. The clock mode is kept.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        let snap = Snapshot::read(path)?;
        let restored = snap.into_state()?;
        let clock = match self.clock {
            Clock::RealTime { .. } => Clock::real_time(),
            c => c,
        };
        *self = restored.with_clock(clock);
        Ok(())
    }

    /// Parses and executes one protocol line.
    pub fn apply_command(&mut self, line: &str) -> Outcome {
        match protocol::parse_command(line) {
            Ok(cmd) => self.execute(cmd),
            Err(e) => Outcome::Reply(e.to_string()),
        }
    }

    pub fn execute(&mut self, cmd: Command) -> Outcome {
        let err = |e: Error| Outcome::Reply(ProtocolError::from(&e).to_string());
        match cmd {
            Command::Idn => Outcome::Reply(IDN.to_string()),
            Command::Set { ch, volts } => match self.set_voltage(ch, volts) {
                Ok(v) => Outcome::Reply(format!("OK {v:.6}")),
                Err(e) => err(e),
            },
            Command::Get { ch } => Outcome::Reply(protocol::format_sig(self.get_voltage(ch), 9)),
            Command::Ramp { ch, volts, rate } => match self.ramp(ch, volts, rate) {
                Ok(_) => Outcome::Reply("OK".into()),
                Err(e) => err(e),
            },
            Command::Meas { ch, fs, n } => match self.plan_measurement(ch, fs, n) {
                Ok(job) => Outcome::Measure(job),
                Err(e) => err(e),
            },
            Command::Stat { ch } => {
                let s = self.status(ch);
                Outcome::Reply(format!("{} {:.6} {:.6}", s.mode, s.applied_v, s.current_a))
            }
            Command::RLoad { ch, ohms } => match self.set_load(ch, ohms) {
                Ok(()) => Outcome::Reply("OK".into()),
                Err(e) => err(e),
            },
            Command::Save { path } => match self.save(Path::new(&path)) {
                Ok(()) => Outcome::Reply("OK".into()),
                Err(_) => Outcome::Reply(ProtocolError::Io.to_string()),
            },
            Command::Load { path } => match self.load(Path::new(&path)) {
                Ok(()) => Outcome::Reply("OK".into()),
                Err(_) => Outcome::Reply(ProtocolError::Io.to_string()),
            },
        }
    }
}
