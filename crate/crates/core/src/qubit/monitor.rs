use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{coherence_population, fit_ramsey, CoherenceKind, QubitModel, DEFAULT_OPERATING_HZ};
use crate::par::mix_seed;
use crate::twin::{Channel, Instrument};
use crate::{Error, Result};

/// Long-term Ramsey monitoring session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub duration_s: f64,
    pub repetitions: usize,
    /// Shots per delay; 0 uses exact populations.
    pub shots: u32,
    pub seed: u64,
    pub channel: Channel,
    pub operating_hz: f64,
    /// Nominal drive detuning, Hz.
    pub detuning_hz: f64,
    pub n_delays: usize,
    pub max_delay_s: f64,
    /// Per-repetition T2 dispersion: mean, sigma and truncation bounds, s.
    pub t2_mean: f64,
    pub t2_sigma: f64,
    pub t2_min: f64,
    pub t2_max: f64,
    /// Bias samples averaged per repetition.
    pub samples_per_read: usize,
    /// Wait for the wall clock between repetitions instead of running
    /// back to back.
    pub real_time: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            duration_s: 12.0 * 3600.0,
            repetitions: 1000,
            shots: 1000,
            seed: 0,
            channel: Channel::ONE,
            operating_hz: DEFAULT_OPERATING_HZ,
            detuning_hz: 250e3,
            n_delays: 41,
            max_delay_s: 10e-6,
            t2_mean: 4.5e-6,
            t2_sigma: 0.35e-6,
            t2_min: 3.5e-6,
            t2_max: 5.5e-6,
            samples_per_read: 64,
            real_time: false,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 2 {
            return Err(Error::Domain("monitor needs at least 2 repetitions".into()));
        }
        if !(self.duration_s > 0.0) || self.n_delays < 10 || !(self.max_delay_s > 0.0) {
            return Err(Error::Domain(
                "invalid monitor duration or delay grid".into(),
            ));
        }
        if !(self.t2_min > 0.0 && self.t2_min <= self.t2_mean && self.t2_mean <= self.t2_max)
            || self.t2_sigma < 0.0
        {
            return Err(Error::Domain("invalid T2 dispersion".into()));
        }
        if self.samples_per_read < 2 {
            return Err(Error::Domain(
                "need at least 2 bias samples per read".into(),
            ));
        }
        Ok(())
    }

    pub fn delays(&self) -> Vec<f64> {
        (0..self.n_delays)
            .map(|i| self.max_delay_s * i as f64 / (self.n_delays - 1) as f64)
            .collect()
    }

    fn draw_t2<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.t2_sigma == 0.0 {
            return self.t2_mean;
        }
        loop {
            let x = self.t2_mean + self.t2_sigma * rng.sample::<f64, _>(StandardNormal);
            if (self.t2_min..=self.t2_max).contains(&x) {
                return x;
            }
        }
    }
}

/// One repetition; `None` fields mark a failed fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t_s: f64,
    pub fringe_hz: Option<f64>,
    pub t2r_s: Option<f64>,
}

impl MonitorRecord {
    pub fn fit_ok(&self) -> bool {
        self.fringe_hz.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub records: Vec<MonitorRecord>,
    pub bias_v: f64,
    pub sensitivity_hz_per_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// JSON summary of a monitor run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub records: usize,
    pub fits_ok: usize,
    pub fringe_pkpk_hz: Option<f64>,
    pub fringe_mean_hz: Option<f64>,
    pub t2r_mean_s: Option<f64>,
    pub t2r_within_3p5_5p5_us: f64,
    pub bias_v: f64,
    pub sensitivity_hz_per_v: f64,
    pub fringe_histogram: Vec<HistogramBin>,
    pub t2r_histogram: Vec<HistogramBin>,
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return vec![];
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl MonitorResult {
    pub fn fringes(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.fringe_hz).collect()
    }

    pub fn t2rs(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.t2r_s).collect()
    }

    pub fn fringe_pkpk(&self) -> Option<f64> {
        let f = self.fringes();
        if f.len() < 2 {
            return None;
        }
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(hi - lo)
    }

    /// Share of successful T2 fits inside `[lo, hi]`.
    pub fn t2r_fraction_within(&self, lo: f64, hi: f64) -> f64 {
        let t = self.t2rs();
        if t.is_empty() {
            return 0.0;
        }
        t.iter().filter(|x| (lo..=hi).contains(*x)).count() as f64 / t.len() as f64
    }

    pub fn summary(&self, bins: usize) -> MonitorSummary {
        let (f, t) = (self.fringes(), self.t2rs());
        MonitorSummary {
            records: self.records.len(),
            fits_ok: f.len(),
            fringe_pkpk_hz: self.fringe_pkpk(),
            fringe_mean_hz: mean(&f),
            t2r_mean_s: mean(&t),
            t2r_within_3p5_5p5_us: self.t2r_fraction_within(3.5e-6, 5.5e-6),
            bias_v: self.bias_v,
            sensitivity_hz_per_v: self.sensitivity_hz_per_v,
            fringe_histogram: histogram(&f, bins),
            t2r_histogram: histogram(&t, bins),
        }
    }

    /// `t_s,fringe_hz,t2r_s,fit_ok`; failed fits leave the values empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,fringe_hz,t2r_s,fit_ok")?;
        for r in &self.records {
            let opt = |x: Option<f64>| x.map(|v| format!("{v:.9e}")).unwrap_or_default();
            writeln!(
                w,
                "{:.3},{},{},{}",
                r.t_s,
                opt(r.fringe_hz),
                opt(r.t2r_s),
                u8::from(r.fit_ok())
            )?;
        }
        Ok(())
    }
}

/// Biases the qubit from `inst`, then at each repetition reads the bias
/// over one interval, converts its deviation to a fringe shift, simulates a
/// shot-sampled Ramsey scan and fits it.
pub fn run_monitor<I: Instrument + ?Sized>(
    inst: &mut I,
    model: &QubitModel,
    cfg: &MonitorConfig,
) -> Result<MonitorResult> {
    model.validate()?;
    cfg.validate()?;
    let bias = model.operating_bias(cfg.operating_hz)?;
    let applied = inst.set_voltage(cfg.channel, bias)?;
    let s = model.sensitivity(applied)?;
    let interval = cfg.duration_s / cfg.repetitions as f64;
    let fs = cfg.samples_per_read as f64 / interval;
    let delays = cfg.delays();

    let start = std::time::Instant::now();
    let mut records = Vec::with_capacity(cfg.repetitions);
    for i in 0..cfg.repetitions {
        if cfg.real_time {
            let due = start + std::time::Duration::from_secs_f64(i as f64 * interval);
            if let Some(wait) = due.checked_duration_since(std::time::Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        let trace = inst.measure(cfg.channel, fs, cfg.samples_per_read)?;
        let fringe = cfg.detuning_hz + s * (trace.mean() - applied);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, i as u64));
        let t2 = cfg.draw_t2(&mut rng);
        let qubit = QubitModel {
            t2_ramsey: t2,
            t2_echo: model.t2_echo.max(t2),
            ..*model
        };
        let probs = delays
            .iter()
            .map(|&t| {
                let p = coherence_population(CoherenceKind::Ramsey, t, &qubit, fringe, 0.0)?;
                Ok(if cfg.shots == 0 {
                    p
                } else {
                    let b = Binomial::new(cfg.shots as u64, p.clamp(0.0, 1.0))
                        .map_err(|e| Error::Domain(e.to_string()))?;
                    b.sample(&mut rng) as f64 / cfg.shots as f64
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let t_s = i as f64 * interval;
        records.push(match fit_ramsey(&delays, &probs) {
            Ok(fit) => MonitorRecord {
                t_s,
                fringe_hz: Some(fit.fringe_hz),
                t2r_s: Some(fit.t2),
            },
            Err(Error::FitFailure(why)) => {
                log::debug!("repetition {i}: {why}");
                MonitorRecord {
                    t_s,
                    fringe_hz: None,
                    t2r_s: None,
                }
            }
            Err(e) => return Err(e),
        });
    }
    Ok(MonitorResult {
        records,
        bias_v: applied,
        sensitivity_hz_per_v: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twin::{InstrumentState, LocalTwin, TwinConfig};

    #[test]
    fn quiet_twin_gives_constant_series() {
        let mut twin = LocalTwin::new(InstrumentState::new(TwinConfig::quiet()).unwrap());
        let cfg = MonitorConfig {
            repetitions: 20,
            shots: 0,
            t2_sigma: 0.0,
            ..MonitorConfig::default()
        };
        let res = run_monitor(&mut twin, &QubitModel::default(), &cfg).unwrap();
        let f = res.fringes();
        assert_eq!(f.len(), 20);
        assert!(f.iter().all(|x| (x - f[0]).abs() < 1e-6));
        let t = res.t2rs();
        assert!(t.iter().all(|x| (x - t[0]).abs() < 1e-15));
        assert!((t[0] / 4.5e-6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn csv_marks_gaps() {
        let res = MonitorResult {
            records: vec![
                MonitorRecord {
                    t_s: 0.0,
                    fringe_hz: Some(2.5e5),
                    t2r_s: Some(4.5e-6),
                },
                MonitorRecord {
                    t_s: 43.2,
                    fringe_hz: None,
                    t2r_s: None,
                },
            ],
            bias_v: 0.13,
            sensitivity_hz_per_v: -1.6e10,
        };
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("43.200,,,0\n"));
        assert_eq!(res.summary(5).fits_ok, 1);
    }

    #[test]
    fn rejects_single_repetition() {
        let mut twin = LocalTwin::new(InstrumentState::new(TwinConfig::quiet()).unwrap());
        let cfg = MonitorConfig {
            repetitions: 1,
            ..MonitorConfig::default()
        };
        assert!(run_monitor(&mut twin, &QubitModel::default(), &cfg).is_err());
    }
}
