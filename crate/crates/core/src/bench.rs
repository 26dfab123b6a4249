//! End-to-end bench runners: each drives a twin through one of the six
//! electronics benchmarks and reduces the result to JSON records plus the
//! raw traces or spectra.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde_json::json;

use crate::metrology::{
    bandlimit, peak_to_peak, rms, run_crosstalk_protocol, spectrum_dbm, welch_asd, BenchRecord,
    CrosstalkResult, CrosstalkSweep, MeasurementFloors, PowerSpectrum, SpectrumEstimate,
};
use crate::noise::{AsdModel, Trace};
use crate::par::mix_seed;
use crate::twin::{Channel, Clock, InstrumentState, LocalTwin, TwinConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Ripple,
    Rms,
    LfNoise,
    HfNoise,
    Drift,
    Crosstalk,
}

impl BenchKind {
    pub const ALL: [BenchKind; 6] = [
        BenchKind::Ripple,
        BenchKind::Rms,
        BenchKind::LfNoise,
        BenchKind::HfNoise,
        BenchKind::Drift,
        BenchKind::Crosstalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Ripple => "ripple",
            BenchKind::Rms => "rms",
            BenchKind::LfNoise => "lfnoise",
            BenchKind::HfNoise => "hfnoise",
            BenchKind::Drift => "drift",
            BenchKind::Crosstalk => "crosstalk",
        }
    }
}

impl FromStr for BenchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown bench {s:?}")))
    }
}

/// Ripple: oscilloscope at 50 MS/s for 1 ms, 20 MHz limit, output at 0 V.
pub const RIPPLE_FS: f64 = 50e6;
pub const RIPPLE_SAMPLES: usize = 50_000;
pub const SCOPE_BANDWIDTH: f64 = 20e6;
pub const RMS_SETPOINTS: [f64; 6] = [0.0, 0.5, 1.0, 3.0, 5.0, 7.0];
pub const LF_FS: f64 = 1e6;
pub const LF_SAMPLES: usize = 1 << 20;
pub const LF_NPERSEG: usize = 1 << 15;
pub const HF_FS: f64 = 500e6;
pub const HF_SAMPLES: usize = 1 << 22;
pub const HF_NPERSEG: usize = 1 << 16;
pub const HF_BAND: (f64, f64) = (9e3, 200e6);
pub const DRIFT_SETPOINTS: [f64; 3] = [0.0, 0.5, 5.0];
pub const DRIFT_DURATION_S: f64 = 12.0 * 3600.0;
pub const DRIFT_INTERVAL_S: f64 = 10.0;
pub const LOAD_OHMS: f64 = 50.0;

/// Shared settings of a bench run.
#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub config: TwinConfig,
    pub seed: u64,
    /// Run the slow benches on the simulated clock.
    pub accelerate: bool,
    /// Add the instruments' noise floors ("as measured").
    pub floors: Option<MeasurementFloors>,
}

impl BenchSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            config: TwinConfig::default(),
            seed,
            accelerate: true,
            floors: Some(MeasurementFloors::default()),
        }
    }

    fn twin(&self, tag: u64) -> Result<InstrumentState> {
        let cfg = self.config.clone().with_seed(mix_seed(self.seed, tag));
        InstrumentState::new(cfg)
    }

    fn floor_seed(&self, tag: u64) -> u64 {
        mix_seed(self.seed, 1000 + tag)
    }

    fn record(
        &self,
        metric: &str,
        value: f64,
        unit: &str,
        config: serde_json::Value,
    ) -> BenchRecord {
        BenchRecord {
            metric: metric.into(),
            value,
            unit: unit.into(),
            config,
            seed: self.seed,
        }
    }
}

/// Records plus the raw data behind them.
#[derive(Debug, Clone, Default)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    /// Named traces, written in the trace CSV format.
    pub traces: Vec<(String, Trace)>,
    /// Named CSV tables.
    pub tables: Vec<(String, String)>,
}

impl BenchOutput {
    /// Writes `<name>.json` (all records), the traces and the tables.
    pub fn write(&self, dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join(format!("{name}.json"));
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&self.records).expect("records serialize"),
        )?;
        written.push(path);
        for (n, t) in &self.traces {
            let path = dir.join(format!("{n}.csv"));
            t.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            written.push(path);
        }
        for (n, body) in &self.tables {
            let path = dir.join(format!("{n}.csv"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Ripple trace (bandlimited, optionally with the scope floor) and its pk-pk.
pub fn ripple(settings: &BenchSettings) -> Result<(f64, Trace)> {
    let mut st = settings.twin(1)?;
    st.set_voltage(Channel::ONE, 0.0)?;
    let raw = st.measure_trace(Channel::ONE, RIPPLE_FS, RIPPLE_SAMPLES)?;
    let mut seen = bandlimit(&raw, SCOPE_BANDWIDTH)?;
    if let Some(f) = &settings.floors {
        seen = f.scope_ripple(&seen, settings.floor_seed(1));
    }
    // AC coupling.
    let m = seen.mean();
    let seen = seen.offset(-m);
    Ok((peak_to_peak(&seen)?, seen))
}

/// Bandlimited rms at `setpoint`, optionally with the scope floor.
pub fn rms_at(settings: &BenchSettings, setpoint: f64) -> Result<f64> {
    let mut st = settings.twin(2)?;
    st.set_voltage(Channel::ONE, setpoint)?;
    let raw = st.measure_trace(Channel::ONE, RIPPLE_FS, RIPPLE_SAMPLES)?;
    let mut seen = bandlimit(&raw, SCOPE_BANDWIDTH)?;
    if let Some(f) = &settings.floors {
        seen = f.scope_rms(&seen, mix_seed(settings.floor_seed(2), setpoint.to_bits()));
    }
    Ok(rms(&seen, true))
}

/// Welch ASD of the output at 0 V, 1 MS/s, 2^20 samples.
pub fn lf_spectrum(settings: &BenchSettings) -> Result<SpectrumEstimate> {
    let mut st = settings.twin(3)?;
    st.set_voltage(Channel::ONE, 0.0)?;
    let mut tr = st.measure_trace(Channel::ONE, LF_FS, LF_SAMPLES)?;
    if let Some(f) = &settings.floors {
        tr = f.audio(&tr, settings.floor_seed(3));
    }
    welch_asd(&tr, LF_NPERSEG)
}

/// rms-average ASD over `[f_lo, f_hi]`.
pub fn band_asd(est: &SpectrumEstimate, f_lo: f64, f_hi: f64) -> f64 {
    let sel: Vec<f64> = est
        .freqs
        .iter()
        .zip(&est.asd)
        .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
        .map(|(_, a)| a * a)
        .collect();
    if sel.is_empty() {
        return est.asd_at(0.5 * (f_lo + f_hi));
    }
    (sel.iter().sum::<f64>() / sel.len() as f64).sqrt()
}

/// dBm spectrum into 50 ohm with the example spur table, 500 MS/s.
pub fn hf_spectrum(settings: &BenchSettings) -> Result<PowerSpectrum> {
    let mut cfg = settings.config.clone();
    cfg.noise = cfg.noise.with_spurs(AsdModel::example_spurs());
    let bench = BenchSettings {
        config: cfg,
        ..settings.clone()
    };
    let mut st = bench.twin(4)?;
    st.set_voltage(Channel::ONE, 0.0)?;
    let mut tr = st.measure_trace(Channel::ONE, HF_FS, HF_SAMPLES)?;
    if let Some(f) = &settings.floors {
        let rbw = 1.5 * HF_FS / HF_NPERSEG as f64;
        tr = f.analyzer(&tr, rbw, LOAD_OHMS, settings.floor_seed(4));
    }
    spectrum_dbm(&tr, LOAD_OHMS, HF_NPERSEG)
}

/// Twelve hours of output at `setpoint` sampled every 10 s. With
/// `accelerate` the twin runs on the simulated clock; otherwise each sample
/// waits for the wall clock.
pub fn drift_trace(settings: &BenchSettings, setpoint: f64) -> Result<Trace> {
    let n = (DRIFT_DURATION_S / DRIFT_INTERVAL_S).round() as usize;
    let mut st = settings.twin(mix_seed(5, setpoint.to_bits()))?;
    st.set_voltage(Channel::ONE, setpoint)?;
    if settings.accelerate {
        return st.measure_trace(Channel::ONE, 1.0 / DRIFT_INTERVAL_S, n);
    }
    let mut st = st.with_clock(Clock::real_time());
    let start = Instant::now();
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let due = start + Duration::from_secs_f64(i as f64 * DRIFT_INTERVAL_S);
        if let Some(wait) = due.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
        samples.push(st.measure_trace(Channel::ONE, 1e3, 2)?.samples[0]);
    }
    Trace::new(1.0 / DRIFT_INTERVAL_S, 0.0, samples)
}

/// CH1 swept -7 V to +7 V in 0.1 V steps while CH2 is read.
pub fn crosstalk(settings: &BenchSettings) -> Result<CrosstalkResult> {
    let mut twin = LocalTwin::new(settings.twin(6)?);
    let sweep = CrosstalkSweep::new(Channel::ONE, Channel::TWO, -7.0, 7.0, 0.1);
    run_crosstalk_protocol(&mut twin, &sweep)
}

pub fn run(kind: BenchKind, settings: &BenchSettings) -> Result<BenchOutput> {
    let floors = settings.floors.is_some();
    let mut out = BenchOutput::default();
    match kind {
        BenchKind::Ripple => {
            let (pkpk, tr) = ripple(settings)?;
            out.records.push(settings.record(
                "ripple_pkpk",
                pkpk,
                "V",
                json!({"fs_hz": RIPPLE_FS, "samples": RIPPLE_SAMPLES, "bandwidth_hz": SCOPE_BANDWIDTH,
                       "setpoint_v": 0.0, "floors": floors}),
            ));
            out.traces.push(("ripple_trace".into(), tr));
        }
        BenchKind::Rms => {
            let mut table = String::from("setpoint_v,rms_v\n");
            for v in RMS_SETPOINTS {
                let r = rms_at(settings, v)?;
                table.push_str(&format!("{v},{r:.9e}\n"));
                out.records.push(settings.record(
                    "rms",
                    r,
                    "V",
                    json!({"setpoint_v": v, "fs_hz": RIPPLE_FS, "samples": RIPPLE_SAMPLES,
                           "bandwidth_hz": SCOPE_BANDWIDTH, "floors": floors}),
                ));
            }
            out.tables.push(("rms_vs_setpoint".into(), table));
        }
        BenchKind::LfNoise => {
            let est = lf_spectrum(settings)?;
            let at = band_asd(&est, 9.5e3, 10.5e3);
            out.records.push(settings.record(
                "lf_asd_10khz",
                at,
                "V/sqrt(Hz)",
                json!({"fs_hz": LF_FS, "samples": LF_SAMPLES, "nperseg": LF_NPERSEG,
                       "averages": est.averages, "rbw_hz": est.rbw, "floors": floors}),
            ));
            let mut table = String::from("freq_hz,asd_v_per_rthz\n");
            for (f, a) in est.freqs.iter().zip(&est.asd).skip(1) {
                table.push_str(&format!("{f},{a:.6e}\n"));
            }
            out.tables.push(("lf_spectrum".into(), table));
        }
        BenchKind::HfNoise => {
            let spec = hf_spectrum(settings)?;
            let (f_peak, max) = spec
                .max_in(HF_BAND.0, HF_BAND.1)
                .ok_or_else(|| Error::Domain("empty analysis band".into()))?;
            out.records.push(settings.record(
                "hf_max_dbm",
                max,
                "dBm",
                json!({"fs_hz": HF_FS, "samples": HF_SAMPLES, "nperseg": HF_NPERSEG,
                       "rbw_hz": spec.rbw, "band_hz": [HF_BAND.0, HF_BAND.1], "peak_hz": f_peak,
                       "load_ohms": LOAD_OHMS, "floors": floors}),
            ));
            let mut table = String::from("freq_hz,dbm\n");
            for (f, d) in spec.freqs.iter().zip(&spec.dbm).skip(1) {
                table.push_str(&format!("{f},{d:.3}\n"));
            }
            out.tables.push(("hf_spectrum".into(), table));
        }
        BenchKind::Drift => {
            for v in DRIFT_SETPOINTS {
                let tr = drift_trace(settings, v)?;
                out.records.push(settings.record(
                    "drift_pkpk",
                    peak_to_peak(&tr)?,
                    "V",
                    json!({"setpoint_v": v, "duration_s": DRIFT_DURATION_S,
                           "interval_s": DRIFT_INTERVAL_S, "accelerated": settings.accelerate}),
                ));
                out.traces.push((format!("drift_{v}V"), tr));
            }
        }
        BenchKind::Crosstalk => {
            let r = crosstalk(settings)?;
            let cfg = json!({"aggressor": 1, "victim": 2, "v_start": -7.0, "v_stop": 7.0, "step": 0.1,
                             "samples_per_point": crate::metrology::MIN_SAMPLES_PER_POINT});
            out.records.push(settings.record(
                "crosstalk_victim_pkpk",
                r.victim_pkpk,
                "V",
                cfg.clone(),
            ));
            out.records
                .push(settings.record("crosstalk_kappa", r.kappa_est, "V/V", cfg.clone()));
            out.records
                .push(settings.record("crosstalk_residual_rms", r.residual_rms, "V", cfg));
            let mut table = String::from("aggressor_v,victim_v\n");
            for (a, v) in r.aggressor_v.iter().zip(&r.victim_v) {
                table.push_str(&format!("{a:.6},{v:.9e}\n"));
            }
            out.tables.push(("crosstalk_sweep".into(), table));
        }
    }
    Ok(out)
}
