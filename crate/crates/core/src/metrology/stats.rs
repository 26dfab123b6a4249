use crate::noise::Trace;
use crate::{Error, Result};

pub fn peak_to_peak(trace: &Trace) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::Domain(
            "peak-to-peak needs at least 2 samples".into(),
        ));
    }
    let (lo, hi) = trace
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    Ok(hi - lo)
}

pub fn rms(trace: &Trace, remove_mean: bool) -> f64 {
    let mean = if remove_mean { trace.mean() } else { 0.0 };
    let ms = trace
        .samples
        .iter()
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / trace.len() as f64;
    ms.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sine(a: f64, cycles: usize, n: usize) -> Trace {
        let s = (0..n)
            .map(|i| a * (TAU * cycles as f64 * i as f64 / n as f64).sin())
            .collect();
        Trace::new(1.0, 0.0, s).unwrap()
    }

    #[test]
    fn constant_trace() {
        let t = Trace::new(1.0, 0.0, vec![2.5; 100]).unwrap();
        assert_eq!(peak_to_peak(&t).unwrap(), 0.0);
        assert_eq!(rms(&t, true), 0.0);
        assert!((rms(&t, false) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn sine_metrics() {
        let t = sine(3.0, 7, 4096);
        assert!((peak_to_peak(&t).unwrap() - 6.0).abs() < 6.0 * 1e-3);
        assert!((rms(&t, true) / (3.0 / 2f64.sqrt()) - 1.0).abs() < 1e-3);
        let ratio = peak_to_peak(&t).unwrap() / rms(&t, true);
        assert!((ratio / (2.0 * 2f64.sqrt()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn short_trace() {
        let t = Trace::new(1.0, 0.0, vec![1.0]).unwrap();
        assert!(peak_to_peak(&t).is_err());
        assert_eq!(rms(&t, false), 1.0);
    }
}
