use serde::{Deserialize, Serialize};

use super::transfer::{PoleZeroGain, StabilityReport};
use crate::{par, Error, Result};

/// One-zero, one-pole lead network.
///
/// `zero_hz == pole_hz` is allowed and is response-neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationParams {
    pub zero_hz: f64,
    pub pole_hz: f64,
}

impl CompensationParams {
    pub fn new(zero_hz: f64, pole_hz: f64) -> Result<Self> {
        let c = Self { zero_hz, pole_hz };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_hz > 0.0 && self.zero_hz.is_finite() && self.pole_hz.is_finite()) {
            return Err(Error::Config(
                "compensation corners must be positive".into(),
            ));
        }
        if self.zero_hz > self.pole_hz {
            return Err(Error::Config(format!(
                "lead zero ({}) must not exceed pole ({})",
                self.zero_hz, self.pole_hz
            )));
        }
        Ok(())
    }
}

/// Returns `tf` with the lead zero and pole appended.
pub fn apply_compensation(tf: &PoleZeroGain, comp: &CompensationParams) -> PoleZeroGain {
    let mut out = tf.clone();
    out.zeros.push(comp.zero_hz);
    out.poles.push(comp.pole_hz);
    out
}

/// Phase-margin tolerance the tuner must meet, degrees.
pub const PM_TOLERANCE_DEG: f64 = 0.1;
/// Relative unity-gain-bandwidth tolerance the tuner must meet.
pub const UGBW_TOLERANCE: f64 = 1e-3;

/// Search box for both lead corners, Hz.
pub const SEARCH_MIN_HZ: f64 = 1e3;
pub const SEARCH_MAX_HZ: f64 = 1e9;

const GRID_PER_DECADE: usize = 4;
const NEWTON_SEEDS: usize = 6;
const MAX_ITERS: usize = 200;

/// Residuals in units of the acceptance tolerance: both entries within
/// [-1, 1] means the targets are met.
fn residual(
    tf: &PoleZeroGain,
    log_zero: f64,
    log_pole: f64,
    pm_target: f64,
    ugbw_target: f64,
) -> Option<[f64; 2]> {
    let comp = CompensationParams {
        zero_hz: 10f64.powf(log_zero),
        pole_hz: 10f64.powf(log_pole),
    };
    let rep = apply_compensation(tf, &comp).stability_report().ok()?;
    Some([
        (rep.ugbw_hz / ugbw_target).ln() / UGBW_TOLERANCE.ln_1p(),
        (rep.phase_margin_deg - pm_target) / PM_TOLERANCE_DEG,
    ])
}

fn norm(r: &[f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

fn meets(rep: &StabilityReport, pm_target: f64, ugbw_target: f64) -> bool {
    (rep.phase_margin_deg - pm_target).abs() <= PM_TOLERANCE_DEG
        && (rep.ugbw_hz / ugbw_target - 1.0).abs() <= UGBW_TOLERANCE
}

/// Fits a lead network so the compensated loop reaches `pm_target` (degrees)
/// at `ugbw_target` (Hz).
///
/// Seeds come from a fixed log grid over the search box (4 points per
/// decade, zero <= pole); the best few seeds are refined by damped Newton
/// iteration on log-frequencies with a finite-difference Jacobian and a
/// Levenberg-style diagonal shift. Fully deterministic.
pub fn tune_compensation(
    tf: &PoleZeroGain,
    pm_target: f64,
    ugbw_target: f64,
) -> Result<CompensationParams> {
    let own = tf.stability_report()?;
    if !(45.0..=70.0).contains(&pm_target) {
        return Err(Error::Range(format!(
            "phase-margin target {pm_target} outside [45, 70] degrees"
        )));
    }
    if !(ugbw_target > 0.0 && ugbw_target.is_finite()) {
        return Err(Error::Range(format!("invalid UGBW target {ugbw_target}")));
    }
    if meets(&own, pm_target, ugbw_target) {
        // Already compliant: a cancelling pair keeps the response unchanged.
        return Ok(CompensationParams {
            zero_hz: ugbw_target,
            pole_hz: ugbw_target,
        });
    }

    let lo = SEARCH_MIN_HZ.log10();
    let hi = SEARCH_MAX_HZ.log10();
    let n = ((hi - lo) as usize) * GRID_PER_DECADE + 1;
    let axis: Vec<f64> = (0..n)
        .map(|i| lo + i as f64 / GRID_PER_DECADE as f64)
        .collect();
    let cells: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&z| axis.iter().filter(move |&&p| p > z).map(move |&p| (z, p)))
        .collect();
    let scored = par::map(&cells, |&(z, p)| {
        residual(tf, z, p, pm_target, ugbw_target).map(|r| (norm(&r), z, p))
    });
    let mut seeds: Vec<(f64, f64, f64)> = scored.into_iter().flatten().collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(NEWTON_SEEDS);

    let mut best: Option<(f64, CompensationParams)> = None;
    for &(_, z0, p0) in &seeds {
        if let Some((cost, comp)) = newton(tf, z0, p0, pm_target, ugbw_target) {
            let rep = apply_compensation(tf, &comp).stability_report()?;
            if meets(&rep, pm_target, ugbw_target) {
                return Ok(comp);
            }
            if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                best = Some((cost, comp));
            }
        }
    }
    let detail = best
        .map(|(c, comp)| format!("; closest residual {c:.3} tolerances at {comp:?}"))
        .unwrap_or_default();
    Err(Error::Infeasible(format!(
        "no lead network in [{SEARCH_MIN_HZ:e}, {SEARCH_MAX_HZ:e}] Hz reaches \
         PM {pm_target} deg at {ugbw_target:e} Hz{detail}"
    )))
}

fn newton(
    tf: &PoleZeroGain,
    z0: f64,
    p0: f64,
    pm_target: f64,
    ugbw_target: f64,
) -> Option<(f64, CompensationParams)> {
    let lo = SEARCH_MIN_HZ.log10();
    let hi = SEARCH_MAX_HZ.log10();
    let eval = |z: f64, p: f64| residual(tf, z, p, pm_target, ugbw_target);
    let (mut z, mut p) = (z0, p0);
    let mut r = eval(z, p)?;
    let mut cost = norm(&r);
    let mut mu = 1e-3;
    const H: f64 = 1e-6;

    for _ in 0..MAX_ITERS {
        if cost < 1e-6 {
            break;
        }
        // Central differences in log10-frequency.
        let col = |dz: f64, dp: f64| -> Option<[f64; 2]> {
            let a = eval(z + dz, p + dp)?;
            let b = eval(z - dz, p - dp)?;
            Some([(a[0] - b[0]) / (2.0 * H), (a[1] - b[1]) / (2.0 * H)])
        };
        let jz = col(H, 0.0)?;
        let jp = col(0.0, H)?;
        // Normal equations (J^T J + mu diag) d = -J^T r.
        let a11 = jz[0] * jz[0] + jz[1] * jz[1];
        let a22 = jp[0] * jp[0] + jp[1] * jp[1];
        let a12 = jz[0] * jp[0] + jz[1] * jp[1];
        let g1 = jz[0] * r[0] + jz[1] * r[1];
        let g2 = jp[0] * r[0] + jp[1] * r[1];

        let mut improved = false;
        for _ in 0..40 {
            let b11 = a11 * (1.0 + mu);
            let b22 = a22 * (1.0 + mu);
            let det = b11 * b22 - a12 * a12;
            if det.abs() < 1e-300 {
                mu *= 10.0;
                continue;
            }
            let dz = -(b22 * g1 - a12 * g2) / det;
            let dp = -(b11 * g2 - a12 * g1) / det;
            // Keep the step modest in decades and inside the box.
            let scale = (0.5 / dz.abs().max(dp.abs())).min(1.0);
            let nz = (z + dz * scale).clamp(lo, hi);
            let np = (p + dp * scale).clamp(nz, hi);
            if let Some(nr) = eval(nz, np) {
                let nc = norm(&nr);
                if nc < cost {
                    z = nz;
                    p = np;
                    r = nr;
                    cost = nc;
                    mu = (mu * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some((
        cost,
        CompensationParams {
            zero_hz: 10f64.powf(z),
            pole_hz: 10f64.powf(p),
        },
    ))
}
