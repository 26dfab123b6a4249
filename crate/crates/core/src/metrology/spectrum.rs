use std::f64::consts::TAU;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::noise::Trace;
use crate::{par, Error, Result};

/// One-sided Welch estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub freqs: Vec<f64>,
    /// V/sqrt(Hz).
    pub asd: Vec<f64>,
    /// Equivalent noise bandwidth of one bin, Hz.
    pub rbw: f64,
    pub averages: usize,
}

impl SpectrumEstimate {
    /// Linear interpolation of the ASD at `f`.
    pub fn asd_at(&self, f: f64) -> f64 {
        let i = self.freqs.partition_point(|&x| x < f);
        if i == 0 {
            return self.asd[0];
        }
        if i >= self.freqs.len() {
            return *self.asd.last().unwrap();
        }
        let (f0, f1) = (self.freqs[i - 1], self.freqs[i]);
        let w = (f - f0) / (f1 - f0);
        self.asd[i - 1] * (1.0 - w) + self.asd[i] * w
    }

    /// Integral of the PSD over all bins, V^2.
    pub fn total_power(&self) -> f64 {
        let df = self.freqs.get(1).map_or(0.0, |f1| f1 - self.freqs[0]);
        self.asd.iter().map(|a| a * a * df).sum()
    }
}

/// Per-bin power spectrum in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    pub dbm: Vec<f64>,
    pub rbw: f64,
}

impl PowerSpectrum {
    /// Largest bin level within `[f_lo, f_hi]`, with its frequency.
    pub fn max_in(&self, f_lo: f64, f_hi: f64) -> Option<(f64, f64)> {
        self.freqs
            .iter()
            .zip(&self.dbm)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(f, d)| (*f, *d))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn hann(n: usize) -> Vec<f64> {
    // Periodic form, so 50% overlapped windows sum to a constant.
    (0..n)
        .map(|i| 0.5 - 0.5 * (TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Averaged one-sided PSD (V^2/Hz) with the window's power sums.
struct Welch {
    psd: Vec<f64>,
    enbw_bins: f64,
    averages: usize,
}

fn welch(trace: &Trace, nperseg: usize) -> Result<Welch> {
    if nperseg < 8 {
        return Err(Error::Domain(format!(
            "nperseg must be >= 8, got {nperseg}"
        )));
    }
    if nperseg > trace.len() {
        return Err(Error::Domain(format!(
            "nperseg {nperseg} exceeds trace length {}",
            trace.len()
        )));
    }
    let window = hann(nperseg);
    let s1: f64 = window.iter().sum();
    let s2: f64 = window.iter().map(|w| w * w).sum();
    let hop = nperseg / 2;
    let segments = (trace.len() - nperseg) / hop + 1;
    let fft = FftPlanner::new().plan_fft_forward(nperseg);
    let bins = nperseg / 2 + 1;

    let spectra = par::map_range(segments, |s| {
        let seg = &trace.samples[s * hop..s * hop + nperseg];
        let mean = seg.iter().sum::<f64>() / nperseg as f64;
        let mut buf: Vec<Complex<f64>> = seg
            .iter()
            .zip(&window)
            .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        buf[..bins]
            .iter()
            .map(|c| c.norm_sqr())
            .collect::<Vec<f64>>()
    });

    let mut psd = vec![0.0; bins];
    for spec in &spectra {
        for (acc, p) in psd.iter_mut().zip(spec) {
            *acc += p;
        }
    }
    let scale = 1.0 / (trace.fs * s2 * segments as f64);
    for (k, p) in psd.iter_mut().enumerate() {
        let one_sided = if k == 0 || 2 * k == nperseg { 1.0 } else { 2.0 };
        *p *= scale * one_sided;
    }
    Ok(Welch {
        psd,
        enbw_bins: nperseg as f64 * s2 / (s1 * s1),
        averages: segments,
    })
}

/// Welch amplitude spectral density: periodic Hann window, 50% overlap,
/// per-segment mean removal, one-sided density scaling.
pub fn welch_asd(trace: &Trace, nperseg: usize) -> Result<SpectrumEstimate> {
    let w = welch(trace, nperseg)?;
    let df = trace.fs / nperseg as f64;
    Ok(SpectrumEstimate {
        freqs: (0..w.psd.len()).map(|k| k as f64 * df).collect(),
        asd: w.psd.iter().map(|p| p.sqrt()).collect(),
        rbw: w.enbw_bins * df,
        averages: w.averages,
    })
}

/// Power in each Welch bin delivered to `r_load`, dBm. A line that falls on
/// a bin reads its full power.
pub fn spectrum_dbm(trace: &Trace, r_load: f64, nperseg: usize) -> Result<PowerSpectrum> {
    if !(r_load > 0.0) {
        return Err(Error::Domain(format!(
            "load must be positive, got {r_load}"
        )));
    }
    let w = welch(trace, nperseg)?;
    let df = trace.fs / nperseg as f64;
    let rbw = w.enbw_bins * df;
    Ok(PowerSpectrum {
        freqs: (0..w.psd.len()).map(|k| k as f64 * df).collect(),
        dbm: w
            .psd
            .iter()
            .map(|p| 10.0 * (p * rbw / r_load / 1e-3).max(1e-300).log10())
            .collect(),
        rbw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(a: f64, f: f64, fs: f64, n: usize) -> Trace {
        Trace::new(
            fs,
            0.0,
            (0..n)
                .map(|i| a * (TAU * f * i as f64 / fs).sin())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hann_enbw() {
        let t = Trace::new(1.0, 0.0, vec![0.0; 64]).unwrap();
        let w = welch(&t, 64).unwrap();
        assert!((w.enbw_bins - 1.5).abs() < 1e-12);
        assert_eq!(w.averages, 1);
    }

    #[test]
    fn segment_count() {
        let t = Trace::new(1.0, 0.0, vec![0.0; 1000]).unwrap();
        let e = welch_asd(&t, 100).unwrap();
        assert_eq!(e.averages, 19);
        assert_eq!(e.freqs.len(), 51);
    }

    #[test]
    fn sine_power_over_enbw() {
        let (fs, n, a) = (1e4, 1 << 14, 0.3);
        let t = sine(a, 1250.0, fs, n);
        let e = welch_asd(&t, 1024).unwrap();
        let k = (1250.0 / (fs / 1024.0)) as usize;
        let p = e.asd[k].powi(2) * e.rbw;
        assert!((p / (a * a / 2.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn dbm_of_known_sines() {
        let fs = 1e6;
        let n = 1 << 14;
        let f = 1024.0 * fs / n as f64 * 4.0;
        let t = sine(0.223_607 * 2f64.sqrt(), f, fs, n);
        let s = spectrum_dbm(&t, 50.0, 4096).unwrap();
        let (_, top) = s.max_in(0.0, fs).unwrap();
        assert!(top.abs() < 0.01, "{top}");

        let t = sine(250e-6, f, fs, n);
        let s = spectrum_dbm(&t, 50.0, 4096).unwrap();
        let (_, top) = s.max_in(0.0, fs).unwrap();
        assert!((top + 62.04).abs() < 0.01, "{top}");
    }

    #[test]
    fn errors() {
        let t = Trace::new(1.0, 0.0, vec![0.0; 16]).unwrap();
        assert!(welch_asd(&t, 4).is_err());
        assert!(welch_asd(&t, 32).is_err());
        assert!(spectrum_dbm(&t, 0.0, 8).is_err());
    }
}
