use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Flat noise density over `[f_lo, f_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteSegment {
    pub f_lo: f64,
    pub f_hi: f64,
    /// V/sqrt(Hz).
    pub asd: f64,
}

/// Deterministic spectral line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spur {
    pub freq: f64,
    /// Peak amplitude, V.
    pub amplitude: f64,
}

/// One-sided output noise model: piecewise-white floor, a 1/f term and
/// discrete spurs.
///
/// The flicker term contributes `flicker_coeff^2 / f` (V^2/Hz) for
/// `f >= flicker_fmin` and nothing below; slower wander belongs to the drift
/// model. Frequencies outside every white segment carry no white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsdModel {
    #[serde(default)]
    pub white_segments: Vec<WhiteSegment>,
    #[serde(default)]
    pub flicker_coeff: f64,
    #[serde(default = "default_flicker_fmin")]
    pub flicker_fmin: f64,
    #[serde(default)]
    pub spurs: Vec<Spur>,
}

fn default_flicker_fmin() -> f64 {
    1.0
}

/// Low-frequency floor below 100 kHz, V/sqrt(Hz).
pub const DEFAULT_LF_FLOOR: f64 = 20e-9;
/// Floor from 100 kHz to 25 MHz, V/sqrt(Hz).
pub const DEFAULT_HF_FLOOR: f64 = 11.5e-9;

impl Default for AsdModel {
    fn default() -> Self {
        Self::default_output()
    }
}

/// Peak volts of a sine that delivers `dbm` into `r_load` ohms.
pub fn dbm_to_peak_volts(dbm: f64, r_load: f64) -> f64 {
    (2.0 * r_load * 1e-3 * 10f64.powf(dbm / 10.0)).sqrt()
}

impl AsdModel {
    pub fn zero() -> Self {
        Self {
            white_segments: vec![],
            flicker_coeff: 0.0,
            flicker_fmin: default_flicker_fmin(),
            spurs: vec![],
        }
    }

    pub fn white(asd: f64, f_hi: f64) -> Self {
        Self {
            white_segments: vec![WhiteSegment {
                f_lo: 0.0,
                f_hi,
                asd,
            }],
            ..Self::zero()
        }
    }

    /// Device output noise: 20 nV/rtHz below 100 kHz, 11.5 nV/rtHz up to
    /// 25 MHz, and a 1/f term that puts 10 Hz at ten times the 20 nV floor.
    pub fn default_output() -> Self {
        let at_10hz = 10.0 * DEFAULT_LF_FLOOR;
        let flicker_coeff = (10.0 * (at_10hz.powi(2) - DEFAULT_LF_FLOOR.powi(2))).sqrt();
        Self {
            white_segments: vec![
                WhiteSegment {
                    f_lo: 0.0,
                    f_hi: 100e3,
                    asd: DEFAULT_LF_FLOOR,
                },
                WhiteSegment {
                    f_lo: 100e3,
                    f_hi: 25e6,
                    asd: DEFAULT_HF_FLOOR,
                },
            ],
            flicker_coeff,
            flicker_fmin: default_flicker_fmin(),
            spurs: vec![],
        }
    }

    /// Spur table used to exercise the high-frequency spectrum bench: four
    /// lines at -100 dBm into 50 ohms.
    pub fn example_spurs() -> Vec<Spur> {
        let a = dbm_to_peak_volts(-100.0, 50.0);
        [1.25e6, 12.5e6, 48.0e6, 150.0e6]
            .into_iter()
            .map(|freq| Spur { freq, amplitude: a })
            .collect()
    }

    pub fn with_spurs(mut self, spurs: Vec<Spur>) -> Self {
        self.spurs = spurs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut segs = self.white_segments.clone();
        segs.sort_by(|a, b| a.f_lo.total_cmp(&b.f_lo));
        for s in &segs {
            if !(s.f_lo >= 0.0 && s.f_hi > s.f_lo && s.asd >= 0.0 && s.f_hi.is_finite()) {
                return Err(Error::Config(format!("invalid white segment {s:?}")));
            }
        }
        if segs.windows(2).any(|w| w[1].f_lo < w[0].f_hi) {
            return Err(Error::Config("white segments overlap".into()));
        }
        if !(self.flicker_coeff >= 0.0 && self.flicker_fmin > 0.0) {
            return Err(Error::Config(
                "flicker coefficient must be >= 0 and its lower cutoff > 0".into(),
            ));
        }
        for s in &self.spurs {
            if !(s.freq > 0.0 && s.amplitude >= 0.0) {
                return Err(Error::Config(format!("invalid spur {s:?}")));
            }
        }
        Ok(())
    }

    pub fn white_asd(&self, f: f64) -> f64 {
        self.white_segments
            .iter()
            .find(|s| f >= s.f_lo && f <= s.f_hi)
            .map_or(0.0, |s| s.asd)
    }

    /// One-sided PSD (V^2/Hz) of the continuous part at `f`.
    pub fn psd(&self, f: f64) -> f64 {
        let flicker = if f >= self.flicker_fmin && f > 0.0 {
            self.flicker_coeff.powi(2) / f
        } else {
            0.0
        };
        self.white_asd(f).powi(2) + flicker
    }

    pub fn asd(&self, f: f64) -> f64 {
        self.psd(f).sqrt()
    }

    /// Integral of the continuous PSD over `[f_lo, f_hi]`, V^2.
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> f64 {
        if f_hi <= f_lo {
            return 0.0;
        }
        let white: f64 = self
            .white_segments
            .iter()
            .map(|s| {
                let overlap = f_hi.min(s.f_hi) - f_lo.max(s.f_lo);
                overlap.max(0.0) * s.asd.powi(2)
            })
            .sum();
        let lo = f_lo.max(self.flicker_fmin);
        let flicker = if f_hi > lo {
            self.flicker_coeff.powi(2) * (f_hi / lo).ln()
        } else {
            0.0
        };
        white + flicker
    }

    pub fn band_rms(&self, f_lo: f64, f_hi: f64) -> f64 {
        self.band_power(f_lo, f_hi).sqrt()
    }

    /// Copy with the continuous part scaled by `k` in amplitude; spurs are
    /// left alone.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            white_segments: self
                .white_segments
                .iter()
                .map(|s| WhiteSegment {
                    asd: s.asd * k,
                    ..*s
                })
                .collect(),
            flicker_coeff: self.flicker_coeff * k,
            ..self.clone()
        }
    }

    pub fn is_silent(&self) -> bool {
        self.white_segments.iter().all(|s| s.asd == 0.0)
            && self.flicker_coeff == 0.0
            && self.spurs.iter().all(|s| s.amplitude == 0.0)
    }
}
