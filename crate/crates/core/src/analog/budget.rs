use serde::{Deserialize, Serialize};

use super::transfer::PoleZeroGain;
use crate::{Error, Result};

/// Supply-rejection curve of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupplyRejection {
    /// Same rejection (dB) at every frequency.
    Flat { db: f64 },
    /// Piecewise-linear in log-frequency, held constant beyond the ends.
    Points { points: Vec<(f64, f64)> },
}

impl SupplyRejection {
    pub fn db_at(&self, f: f64) -> f64 {
        match self {
            SupplyRejection::Flat { db } => *db,
            SupplyRejection::Points { points } => {
                let Some(first) = points.first() else {
                    return 0.0;
                };
                if f <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((f0, d0), (f1, d1)) = (w[0], w[1]);
                    if f <= f1 {
                        let t = (f / f0).ln() / (f1 / f0).ln();
                        return d0 + t * (d1 - d0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SupplyRejection::Flat { db } if *db >= 0.0 => Ok(()),
            SupplyRejection::Points { points }
                if points.iter().all(|&(f, d)| f > 0.0 && d >= 0.0)
                    && points.windows(2).all(|w| w[0].0 < w[1].0) =>
            {
                Ok(())
            }
            _ => Err(Error::Config(
                "supply rejection must be >= 0 dB at increasing frequencies".into(),
            )),
        }
    }
}

/// One stage of the output chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStage {
    /// Input-referred voltage noise density, V/sqrt(Hz).
    pub source_asd: f64,
    pub forward_gain: PoleZeroGain,
    pub supply_rejection: SupplyRejection,
}

impl NoiseStage {
    pub fn unity(source_asd: f64, rejection_db: f64) -> Self {
        Self {
            source_asd,
            forward_gain: PoleZeroGain {
                dc_gain: 1.0,
                poles: vec![],
                zeros: vec![],
            },
            supply_rejection: SupplyRejection::Flat { db: rejection_db },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.source_asd >= 0.0) {
            return Err(Error::Config("stage noise density must be >= 0".into()));
        }
        self.forward_gain.validate()?;
        self.supply_rejection.validate()
    }
}

/// Output noise density of a cascade of stages (first stage first).
///
/// Each stage contributes its input-referred noise times the gain from its
/// input to the chain output, and the shared supply noise reduced by its
/// rejection times the gain of the stages after it. Sources are
/// uncorrelated and add in quadrature.
pub fn chain_output_asd(stages: &[NoiseStage], supply_asd: f64, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::Domain(format!(
            "frequency must be positive, got {f}"
        )));
    }
    if !(supply_asd >= 0.0) {
        return Err(Error::Domain("supply noise density must be >= 0".into()));
    }
    for s in stages {
        s.validate()?;
    }
    let gains: Vec<f64> = stages.iter().map(|s| s.forward_gain.magnitude(f)).collect();
    let mut power = 0.0;
    for (i, stage) in stages.iter().enumerate() {
        let after: f64 = gains[i + 1..].iter().product();
        let through = gains[i] * after;
        let supply = supply_asd * 10f64.powf(-stage.supply_rejection.db_at(f) / 20.0);
        power += (stage.source_asd * through).powi(2) + (supply * after).powi(2);
    }
    Ok(power.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_stage() {
        let asd = chain_output_asd(&[NoiseStage::unity(20e-9, 200.0)], 0.0, 1e3).unwrap();
        assert!((asd - 20e-9).abs() < 1e-20);
    }

    #[test]
    fn three_four_five() {
        let stages = [
            NoiseStage::unity(3e-9, 300.0),
            NoiseStage::unity(4e-9, 300.0),
        ];
        let asd = chain_output_asd(&stages, 0.0, 1e3).unwrap();
        assert!((asd - 5e-9).abs() < 1e-18);
    }

    #[test]
    fn supply_through_rejection() {
        let asd = chain_output_asd(&[NoiseStage::unity(15e-9, 90.0)], 1.2e-6, 1e3).unwrap();
        let expect = ((1.2e-6 / 10f64.powf(4.5)).powi(2) + 15e-9f64.powi(2)).sqrt();
        assert!((asd - expect).abs() < 1e-20);
        // The supply term is only 38 pV/rtHz after 90 dB.
        assert!((asd - 15.000_048e-9).abs() < 1e-15);
    }

    #[test]
    fn gain_scales_upstream_noise() {
        let mut amp = NoiseStage::unity(0.0, 120.0);
        amp.forward_gain.dc_gain = 10.0;
        let stages = [NoiseStage::unity(2e-9, 300.0), amp];
        let asd = chain_output_asd(&stages, 0.0, 1.0).unwrap();
        assert!((asd - 20e-9).abs() < 1e-18);
    }

    #[test]
    fn rejection_curve_interpolates() {
        let r = SupplyRejection::Points {
            points: vec![(1e2, 100.0), (1e4, 60.0)],
        };
        assert_eq!(r.db_at(10.0), 100.0);
        assert!((r.db_at(1e3) - 80.0).abs() < 1e-12);
        assert_eq!(r.db_at(1e6), 60.0);
    }

    #[test]
    fn bad_frequency() {
        assert!(chain_output_asd(&[], 0.0, 0.0).is_err());
    }
}
