use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use super::{AsdModel, Trace};
use crate::{Error, Result};

/// Synthesizes `n` samples at `fs` whose spectrum follows `model`.
///
/// Each positive-frequency bin gets the deterministic amplitude implied by
/// the PSD at its center frequency and an independent uniform phase; the
/// spectrum is made conjugate-symmetric and inverse-transformed. The DC bin
/// is zero, so every synthesized record has exactly zero mean (up to
/// rounding). Spurs are added as exact sinusoids with random phase.
pub fn synthesize_noise(model: &AsdModel, fs: f64, n: usize, seed: u64) -> Result<Trace> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::Domain(format!(
            "sample rate must be positive, got {fs}"
        )));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;

    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    for k in 1..=n / 2 {
        let f = k as f64 * fs / nf;
        let psd = model.psd(f);
        let phase: f64 = rng.random::<f64>() * TAU;
        if 2 * k == n {
            let amp = (psd * fs * nf).sqrt();
            spectrum[k] = Complex::new(amp * phase.cos().signum(), 0.0);
        } else {
            let bin = Complex::from_polar((psd * fs * nf / 2.0).sqrt(), phase);
            spectrum[k] = bin;
            spectrum[n - k] = bin.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let mut samples: Vec<f64> = spectrum.iter().map(|c| c.re / nf).collect();

    for spur in &model.spurs {
        let phase: f64 = rng.random::<f64>() * TAU;
        let w = TAU * spur.freq / fs;
        for (i, s) in samples.iter_mut().enumerate() {
            *s += spur.amplitude * (w * i as f64 + phase).cos();
        }
    }
    Trace::new(fs, 0.0, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Spur;

    #[test]
    fn zero_model_gives_zero_trace() {
        let t = synthesize_noise(&AsdModel::zero(), 1e3, 64, 9).unwrap();
        assert!(t.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            synthesize_noise(&AsdModel::zero(), 1e3, 1, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = AsdModel::default_output();
        let a = synthesize_noise(&m, 1e6, 4096, 42).unwrap();
        let b = synthesize_noise(&m, 1e6, 4096, 42).unwrap();
        let c = synthesize_noise(&m, 1e6, 4096, 43).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn record_mean_is_zero() {
        let t = synthesize_noise(&AsdModel::default_output(), 1e3, 1000, 3).unwrap();
        assert!(t.mean().abs() < 1e-20);
    }

    #[test]
    fn single_spur_is_a_sinusoid() {
        let m = AsdModel::zero().with_spurs(vec![Spur {
            freq: 100e3,
            amplitude: 10e-6,
        }]);
        let t = synthesize_noise(&m, 1e6, 10_000, 5).unwrap();
        let peak = t.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // Ten samples per cycle: the sampled peak is within cos(pi/10) of the amplitude.
        assert!(
            peak <= 10e-6 * (1.0 + 1e-12) && peak >= 10e-6 * (std::f64::consts::PI / 10.0).cos()
        );
        // Correlating against the 100 kHz quadrature pair recovers the amplitude.
        let (mut c, mut s) = (0.0, 0.0);
        for (i, x) in t.samples.iter().enumerate() {
            let ph = TAU * 0.1 * i as f64;
            c += x * ph.cos();
            s += x * ph.sin();
        }
        let amp = 2.0 * c.hypot(s) / t.len() as f64;
        assert!((amp / 10e-6 - 1.0).abs() < 1e-9);
    }
}
