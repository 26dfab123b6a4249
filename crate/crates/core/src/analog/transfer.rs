use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum-phase open-loop transfer function given by its DC gain and real
/// left-half-plane pole and zero corner frequencies (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleZeroGain {
    pub dc_gain: f64,
    #[serde(default)]
    pub poles: Vec<f64>,
    #[serde(default)]
    pub zeros: Vec<f64>,
}

/// Magnitude (dB) and phase (degrees) at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

/// Unity-gain crossing and the phase margin there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub ugbw_hz: f64,
    pub phase_margin_deg: f64,
}

impl PoleZeroGain {
    pub fn new(dc_gain: f64, poles: Vec<f64>, zeros: Vec<f64>) -> Result<Self> {
        let tf = Self {
            dc_gain,
            poles,
            zeros,
        };
        tf.validate()?;
        Ok(tf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dc_gain > 0.0 && self.dc_gain.is_finite()) {
            return Err(Error::Config(format!(
                "dc_gain must be positive and finite, got {}",
                self.dc_gain
            )));
        }
        for &f in self.poles.iter().chain(&self.zeros) {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!(
                    "pole/zero frequencies must be positive and finite, got {f}"
                )));
            }
        }
        Ok(())
    }

    /// Copy with the DC gain multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            dc_gain: self.dc_gain * k,
            ..self.clone()
        }
    }

    pub fn response(&self, f: f64) -> Result<Response> {
        if !(f > 0.0) {
            return Err(Error::Domain(format!(
                "frequency must be positive, got {f}"
            )));
        }
        Ok(Response {
            magnitude_db: self.magnitude_db_unchecked(f),
            phase_deg: self.phase_deg_unchecked(f),
        })
    }

    /// |H(f)| as a linear ratio.
    pub fn magnitude(&self, f: f64) -> f64 {
        10f64.powf(self.magnitude_db_unchecked(f) / 20.0)
    }

    pub(crate) fn magnitude_db_unchecked(&self, f: f64) -> f64 {
        let corner = |c: &f64| 10.0 * (f / c).powi(2).ln_1p() / std::f64::consts::LN_10;
        20.0 * self.dc_gain.log10() + self.zeros.iter().map(corner).sum::<f64>()
            - self.poles.iter().map(corner).sum::<f64>()
    }

    pub(crate) fn phase_deg_unchecked(&self, f: f64) -> f64 {
        let rad: f64 = self.zeros.iter().map(|z| (f / z).atan()).sum::<f64>()
            - self.poles.iter().map(|p| (f / p).atan()).sum::<f64>();
        rad.to_degrees()
    }

    fn corner_range(&self) -> (f64, f64) {
        let all = self.poles.iter().chain(&self.zeros).copied();
        let lo = all.clone().fold(1.0, f64::min);
        let hi = all.fold(1.0, f64::max);
        (lo, hi)
    }

    /// Unity-gain bandwidth and phase margin.
    ///
    /// Scans a log grid (50 points per decade) from far below the lowest
    /// corner for the first downward 0 dB crossing, then bisects it in
    /// log-frequency to a relative width of 1e-12.
    pub fn stability_report(&self) -> Result<StabilityReport> {
        self.validate()?;
        if self.dc_gain <= 1.0 {
            return Err(Error::NotApplicable(format!(
                "|H(0)| = {} does not exceed unity",
                self.dc_gain
            )));
        }
        let (lo, hi) = self.corner_range();
        let start = (lo * 1e-4).log10();
        // Far enough above the top corner that a crossing has to be below it
        // unless the asymptotic slope is non-negative.
        let stop = (hi * 1e4).log10() + self.dc_gain.log10() + 1.0;
        const PER_DECADE: f64 = 50.0;
        let steps = ((stop - start) * PER_DECADE).ceil() as usize;
        let mut prev = start;
        if self.magnitude_db_unchecked(10f64.powf(prev)) <= 0.0 {
            return Err(Error::NotApplicable(
                "gain is below unity at the low end of the scan".into(),
            ));
        }
        for i in 1..=steps {
            let x = start + i as f64 / PER_DECADE;
            if self.magnitude_db_unchecked(10f64.powf(x)) <= 0.0 {
                let ugbw = self.bisect_crossing(prev, x);
                return Ok(StabilityReport {
                    ugbw_hz: ugbw,
                    phase_margin_deg: 180.0 + self.phase_deg_unchecked(ugbw),
                });
            }
            prev = x;
        }
        Err(Error::NotApplicable(
            "open-loop gain never crosses 0 dB".into(),
        ))
    }

    fn bisect_crossing(&self, mut lo: f64, mut hi: f64) -> f64 {
        // lo/hi are log10(f); magnitude(lo) > 0 >= magnitude(hi).
        let tol = 1e-12 / std::f64::consts::LN_10;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.magnitude_db_unchecked(10f64.powf(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        10f64.powf(0.5 * (lo + hi))
    }

    /// Log-spaced Bode table between `f_min` and `f_max`.
    pub fn bode(&self, f_min: f64, f_max: f64, per_decade: usize) -> Result<Vec<(f64, Response)>> {
        if !(f_min > 0.0 && f_max > f_min) || per_decade == 0 {
            return Err(Error::Domain(
                "need 0 < f_min < f_max and per_decade >= 1".into(),
            ));
        }
        let decades = (f_max / f_min).log10();
        let n = (decades * per_decade as f64).ceil() as usize;
        (0..=n)
            .map(|i| {
                let f = f_min * 10f64.powf(decades * i as f64 / n as f64);
                self.response(f).map(|r| (f, r))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DB3: f64 = 3.010_299_956_639_812;

    #[test]
    fn pole_and_zero_corners() {
        let p = PoleZeroGain::new(1.0, vec![1e3], vec![]).unwrap();
        let r = p.response(1e3).unwrap();
        assert!((r.magnitude_db + DB3).abs() < 1e-12);
        assert!((r.phase_deg + 45.0).abs() < 1e-12);

        let z = PoleZeroGain::new(1.0, vec![], vec![2e4]).unwrap();
        let r = z.response(2e4).unwrap();
        assert!((r.magnitude_db - DB3).abs() < 1e-12);
        assert!((r.phase_deg - 45.0).abs() < 1e-12);
    }

    #[test]
    fn single_pole_far_above_corner() {
        let tf = PoleZeroGain::new(1000.0, vec![1e3], vec![]).unwrap();
        let r = tf.response(1e5).unwrap();
        let expect_mag = 60.0 - 10.0 * (1.0f64 + 1e4).log10();
        assert!((r.magnitude_db - expect_mag).abs() < 1e-12);
        assert!((r.magnitude_db - 19.9996).abs() < 1e-4);
        assert!((r.phase_deg - (-(100f64).atan().to_degrees())).abs() < 1e-12);
        assert!((r.phase_deg + 89.43).abs() < 0.01);
    }

    #[test]
    fn non_positive_frequency_rejected() {
        let tf = PoleZeroGain::new(10.0, vec![1.0], vec![]).unwrap();
        assert!(matches!(tf.response(0.0), Err(Error::Domain(_))));
        assert!(matches!(tf.response(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn dominant_pole_report() {
        let tf = PoleZeroGain::new(1e6, vec![1.0], vec![]).unwrap();
        let rep = tf.stability_report().unwrap();
        assert!((rep.ugbw_hz / 1e6 - 1.0).abs() < 1e-6);
        assert!((rep.phase_margin_deg - 90.0).abs() < 1e-4);
        assert!(tf.magnitude_db_unchecked(rep.ugbw_hz).abs() < 1e-6);
    }

    #[test]
    fn no_crossing_is_not_applicable() {
        let flat = PoleZeroGain::new(10.0, vec![], vec![]).unwrap();
        assert!(matches!(
            flat.stability_report(),
            Err(Error::NotApplicable(_))
        ));
        let attenuator = PoleZeroGain::new(0.5, vec![1e3], vec![]).unwrap();
        assert!(matches!(
            attenuator.stability_report(),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn invalid_tf_rejected() {
        assert!(PoleZeroGain::new(0.0, vec![], vec![]).is_err());
        assert!(PoleZeroGain::new(1.0, vec![-3.0], vec![]).is_err());
        assert!(PoleZeroGain::new(1.0, vec![], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn bode_table_spans_range() {
        let tf = PoleZeroGain::new(100.0, vec![10.0], vec![]).unwrap();
        let table = tf.bode(1.0, 1e4, 10).unwrap();
        assert_eq!(table.len(), 41);
        assert!((table[0].0 - 1.0).abs() < 1e-12);
        assert!((table[40].0 - 1e4).abs() < 1e-6);
    }
}
