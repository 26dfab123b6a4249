use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::noise::{dbm_to_peak_volts, Spur, Trace};

/// Ratio of pk-pk to rms assumed when converting the scope's quoted pk-pk
/// floor to a Gaussian sigma.
pub const RIPPLE_CREST_FACTOR: f64 = 8.0;

/// Additive noise floors of the bench instruments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFloors {
    /// Oscilloscope ripple floor, V pk-pk.
    pub scope_pkpk: f64,
    /// Oscilloscope rms floor, V.
    pub scope_rms: f64,
    /// Audio analyzer floor, V/sqrt(Hz).
    pub audio_asd: f64,
    /// Spectrum analyzer displayed floor in its RBW, dBm.
    pub analyzer_dbm: f64,
    /// Analyzer-internal line, if modeled.
    pub analyzer_spur: Option<Spur>,
}

impl Default for MeasurementFloors {
    fn default() -> Self {
        Self {
            scope_pkpk: 100e-6,
            scope_rms: 80e-6,
            audio_asd: 10e-9,
            analyzer_dbm: -110.0,
            analyzer_spur: Some(Spur {
                freq: 137e6,
                amplitude: dbm_to_peak_volts(-100.0, 50.0),
            }),
        }
    }
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma`.
pub fn add_white_noise(trace: &Trace, sigma: f64, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = trace.clone();
    for s in &mut out.samples {
        *s += sigma * rng.sample::<f64, _>(StandardNormal);
    }
    out
}

impl MeasurementFloors {
    pub fn scope_ripple(&self, trace: &Trace, seed: u64) -> Trace {
        add_white_noise(trace, self.scope_pkpk / RIPPLE_CREST_FACTOR, seed)
    }

    pub fn scope_rms(&self, trace: &Trace, seed: u64) -> Trace {
        add_white_noise(trace, self.scope_rms, seed)
    }

    /// White floor at `audio_asd` across the trace's Nyquist band.
    pub fn audio(&self, trace: &Trace, seed: u64) -> Trace {
        add_white_noise(trace, self.audio_asd * (trace.fs / 2.0).sqrt(), seed)
    }

    /// Floor that reads `analyzer_dbm` per bin of resolution bandwidth `rbw`
    /// into `r_load`, plus the optional analyzer line.
    pub fn analyzer(&self, trace: &Trace, rbw: f64, r_load: f64, seed: u64) -> Trace {
        let v2 = r_load * 1e-3 * 10f64.powf(self.analyzer_dbm / 10.0);
        let sigma = (v2 / rbw * trace.fs / 2.0).sqrt();
        let mut out = add_white_noise(trace, sigma, seed);
        if let Some(sp) = self.analyzer_spur.filter(|s| s.freq < trace.fs / 2.0) {
            let w = std::f64::consts::TAU * sp.freq / trace.fs;
            for (i, s) in out.samples.iter_mut().enumerate() {
                *s += sp.amplitude * (w * i as f64).cos();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::{rms, spectrum_dbm, welch_asd};

    #[test]
    fn rms_floor_level() {
        let t = Trace::new(1e6, 0.0, vec![0.0; 200_000]).unwrap();
        let m = MeasurementFloors::default().scope_rms(&t, 4);
        assert!((rms(&m, true) / 80e-6 - 1.0).abs() < 0.01);
    }

    #[test]
    fn audio_floor_density() {
        let t = Trace::new(1e6, 0.0, vec![0.0; 1 << 18]).unwrap();
        let m = MeasurementFloors::default().audio(&t, 5);
        let e = welch_asd(&m, 4096).unwrap();
        let mid: f64 = e.asd[100..1900].iter().map(|a| a * a).sum::<f64>() / 1800.0;
        assert!((mid.sqrt() / 10e-9 - 1.0).abs() < 0.03);
    }

    #[test]
    fn analyzer_floor_reads_its_level() {
        let fs = 500e6;
        let nper = 1 << 12;
        let t = Trace::new(fs, 0.0, vec![0.0; 1 << 17]).unwrap();
        let rbw = 1.5 * fs / nper as f64;
        let floors = MeasurementFloors {
            analyzer_spur: None,
            ..Default::default()
        };
        let m = floors.analyzer(&t, rbw, 50.0, 6);
        let s = spectrum_dbm(&m, 50.0, nper).unwrap();
        let mean_mw: f64 = s.dbm[10..2000]
            .iter()
            .map(|d| 10f64.powf(d / 10.0))
            .sum::<f64>()
            / 1990.0;
        assert!((10.0 * mean_mw.log10() + 110.0).abs() < 0.5);
    }
}
