use rustfft::{num_complex::Complex, FftPlanner};

use crate::analog::butterworth_gain;
use crate::noise::Trace;
use crate::{Error, Result};

/// Order of the emulated oscilloscope bandwidth limit.
pub const BANDLIMIT_ORDER: u32 = 4;

/// Applies a zero-phase 4th-order Butterworth magnitude response at `bw` in
/// the frequency domain.
pub fn bandlimit(trace: &Trace, bw: f64) -> Result<Trace> {
    if !(bw > 0.0 && bw < trace.fs / 2.0) {
        return Err(Error::Domain(format!(
            "bandwidth {bw} Hz must lie in (0, fs/2 = {} Hz)",
            trace.fs / 2.0
        )));
    }
    let n = trace.len();
    let mut buf: Vec<Complex<f64>> = trace
        .samples
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * trace.fs / n as f64;
        *c *= butterworth_gain(BANDLIMIT_ORDER, bw, f);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let samples = buf.iter().map(|c| c.re / n as f64).collect();
    Trace::new(trace.fs, trace.t0, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::rms;
    use std::f64::consts::TAU;

    fn tone(f: f64, fs: f64, n: usize) -> Trace {
        let s = (0..n).map(|i| (TAU * f * i as f64 / fs).sin()).collect();
        Trace::new(fs, 0.0, s).unwrap()
    }

    #[test]
    fn dc_passes_unchanged() {
        let t = Trace::new(1e6, 0.0, vec![3.3; 1000]).unwrap();
        let b = bandlimit(&t, 1e4).unwrap();
        assert!(b.samples.iter().all(|x| (x - 3.3).abs() < 1e-12));
    }

    #[test]
    fn passband_and_stopband() {
        let fs = 1.024e6;
        let n = 1 << 14;
        let bw = 25.6e3;
        // Both tones land on exact bins.
        let low = tone(bw / 100.0 * 1.0, fs, n);
        let kept = bandlimit(&low, bw).unwrap();
        assert!((rms(&kept, false) / rms(&low, false) - 1.0).abs() < 1e-3);

        let high = tone(10.0 * bw, fs, n);
        let cut = bandlimit(&high, bw).unwrap();
        let att = 20.0 * (rms(&high, false) / rms(&cut, false)).log10();
        assert!(att >= 80.0, "attenuation {att} dB");
        assert!((att - 10.0 * (1.0f64 + 1e8).log10()).abs() < 1e-6);
    }

    #[test]
    fn rejects_bandwidth_above_nyquist() {
        let t = Trace::new(1e3, 0.0, vec![0.0; 16]).unwrap();
        assert!(bandlimit(&t, 500.0).is_err());
        assert!(bandlimit(&t, 0.0).is_err());
    }
}
