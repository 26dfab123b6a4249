use crate::{Error, Result};

/// Butterworth low-pass attenuation in dB (positive number) at `f` for a
/// filter of the given order and cutoff.
pub fn butterworth_attenuation(order: u32, fc: f64, f: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::Domain("filter order must be at least 1".into()));
    }
    if !(fc > 0.0 && f > 0.0) {
        return Err(Error::Domain(format!(
            "cutoff and frequency must be positive (fc={fc}, f={f})"
        )));
    }
    let x = (f / fc).powi(2 * order as i32);
    Ok(10.0 * x.ln_1p() / std::f64::consts::LN_10)
}

/// Linear magnitude of the same response, `1/sqrt(1 + (f/fc)^(2n))`.
pub fn butterworth_gain(order: u32, fc: f64, f: f64) -> f64 {
    1.0 / (1.0 + (f / fc).abs().powi(2 * order as i32)).sqrt()
}
