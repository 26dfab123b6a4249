use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `a * exp(-t / tau) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub tau: f64,
    pub tau_stderr: f64,
    pub amplitude: f64,
    pub offset: f64,
}

/// `0.5 * (1 + exp(-t / t2) * cos(2 pi f t + phase)) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub fringe_hz: f64,
    pub t2: f64,
    pub fringe_stderr: f64,
    pub t2_stderr: f64,
    pub phase: f64,
    pub offset: f64,
}

struct LmFit {
    params: Vec<f64>,
    stderr: Vec<f64>,
    ssr: f64,
}

/// Levenberg-Marquardt with Marquardt diagonal scaling and a central
/// difference Jacobian. `scale` holds a typical magnitude per parameter and
/// floors the difference step when a parameter sits near zero.
fn levenberg_marquardt<F>(
    model: F,
    t: &[f64],
    y: &[f64],
    p0: &[f64],
    scale: &[f64],
) -> Option<LmFit>
where
    F: Fn(&[f64], f64) -> f64,
{
    let (n, m) = (t.len(), p0.len());
    let residuals = |p: &[f64]| -> DVector<f64> {
        DVector::from_iterator(n, t.iter().zip(y).map(|(&ti, &yi)| yi - model(p, ti)))
    };
    let ssr_of = |r: &DVector<f64>| r.norm_squared();
    let jacobian = |p: &[f64]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, m);
        let mut q = p.to_vec();
        for k in 0..m {
            let h = 1e-7 * p[k].abs().max(scale[k]);
            q[k] = p[k] + h;
            let up: Vec<f64> = t.iter().map(|&ti| model(&q, ti)).collect();
            q[k] = p[k] - h;
            let dn: Vec<f64> = t.iter().map(|&ti| model(&q, ti)).collect();
            q[k] = p[k];
            for i in 0..n {
                j[(i, k)] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
        j
    };

    let mut p = p0.to_vec();
    let mut r = residuals(&p);
    let mut ssr = ssr_of(&r);
    if !ssr.is_finite() {
        return None;
    }
    let mut lambda = 1e-3;
    for _ in 0..300 {
        let j = jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tr = residuals(&trial);
            let ts = ssr_of(&tr);
            if ts.is_finite() && ts <= ssr {
                let rel = (ssr - ts) / ssr.max(1e-300);
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(d, x)| d.abs() <= 1e-12 * x.abs().max(1e-300));
                p = trial;
                r = tr;
                ssr = ts;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = true;
                if rel < 1e-14 || small_step {
                    let j = jacobian(&p);
                    return finish(p, ssr, j, n, m);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let j = jacobian(&p);
    finish(p, ssr, j, n, m)
}

fn finish(params: Vec<f64>, ssr: f64, j: DMatrix<f64>, n: usize, m: usize) -> Option<LmFit> {
    let dof = n.saturating_sub(m).max(1) as f64;
    // Parameters differ by many decades (Hz vs s), so invert the
    // correlation-scaled normal matrix and scale back.
    let jtj = j.transpose() * &j;
    let d = DVector::from_iterator(m, (0..m).map(|k| 1.0 / jtj[(k, k)].sqrt()));
    let scaled = DMatrix::from_fn(m, m, |a, b| jtj[(a, b)] * d[a] * d[b]);
    let stderr = match scaled.cholesky() {
        Some(ch) if d.iter().all(|x| x.is_finite()) => {
            let inv = ch.inverse();
            (0..m)
                .map(|k| (inv[(k, k)] * d[k] * d[k] * ssr / dof).max(0.0).sqrt())
                .collect()
        }
        _ => vec![f64::INFINITY; m],
    };
    Some(LmFit {
        params,
        stderr,
        ssr,
    })
}

fn check_series(delays: &[f64], probs: &[f64], min_points: usize) -> Result<()> {
    if delays.len() != probs.len() {
        return Err(Error::Domain(
            "delays and populations differ in length".into(),
        ));
    }
    if delays.len() < min_points {
        return Err(Error::Domain(format!("need at least {min_points} points")));
    }
    if delays.iter().chain(probs).any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite input".into()));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("delays must be strictly increasing".into()));
    }
    Ok(())
}

/// Fits `a exp(-t/tau) + c`; the start point comes from a log-linear
/// regression.
pub fn fit_decay(delays: &[f64], probs: &[f64]) -> Result<DecayFit> {
    check_series(delays, probs, 5)?;
    let (lo, hi) = probs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
            (a.min(p), b.max(p))
        });
    let span = delays[delays.len() - 1] - delays[0];
    if hi - lo < 1e-12 {
        return Err(Error::FitFailure("constant data".into()));
    }
    // Log-linear start on points that clear the floor.
    let c0 = lo - 0.01 * (hi - lo);
    let pts: Vec<(f64, f64)> = delays
        .iter()
        .zip(probs)
        .map(|(&t, &p)| (t, (p - c0).ln()))
        .collect();
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let slope = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum::<f64>() / stt;
    if !(slope < 0.0) {
        return Err(Error::FitFailure("data do not decay".into()));
    }
    let tau0 = -1.0 / slope;
    let a0 = (lm - slope * tm).exp();
    let model = |p: &[f64], t: f64| p[0] * (-t / p[1]).exp() + p[2];
    let fit = levenberg_marquardt(model, delays, probs, &[a0, tau0, c0], &[1.0, span, 1.0])
        .ok_or_else(|| Error::FitFailure("least squares diverged".into()))?;
    let (a, tau, c) = (fit.params[0], fit.params[1], fit.params[2]);
    if !(tau > 0.0 && tau.is_finite() && tau < 100.0 * span && a > 0.0) {
        return Err(Error::FitFailure(format!("non-decaying fit (tau = {tau})")));
    }
    Ok(DecayFit {
        tau,
        tau_stderr: fit.stderr[1],
        amplitude: a,
        offset: c,
    })
}

fn ramsey_model(p: &[f64], t: f64) -> f64 {
    0.5 * (1.0 + (-t / p[1]).exp() * (TAU * p[0] * t + p[2]).cos()) + p[3]
}

/// Discrete spectrum peak of the mean-removed series: (frequency, phase,
/// peak magnitude, median magnitude).
fn spectral_peak(delays: &[f64], probs: &[f64]) -> (f64, f64, f64, f64) {
    let n = delays.len();
    let span = delays[n - 1] - delays[0];
    let mean = probs.iter().sum::<f64>() / n as f64;
    let nyquist = (n - 1) as f64 / (2.0 * span);
    let df = 1.0 / (8.0 * span);
    let bins = (nyquist / df).floor() as usize;
    let mut mags = Vec::with_capacity(bins);
    let mut best = (0.0, 0.0, -1.0);
    for k in 1..=bins {
        let f = k as f64 * df;
        let (mut re, mut im) = (0.0, 0.0);
        for (&t, &p) in delays.iter().zip(probs) {
            let w = TAU * f * t;
            re += (p - mean) * w.cos();
            im -= (p - mean) * w.sin();
        }
        let mag = re.hypot(im);
        mags.push(mag);
        if mag > best.2 {
            best = (f, im.atan2(re), mag);
        }
    }
    mags.sort_by(f64::total_cmp);
    let median = mags.get(mags.len() / 2).copied().unwrap_or(0.0);
    (best.0, best.1, best.2, median)
}

/// Fits a Ramsey fringe. The start frequency and phase come from the
/// discrete spectrum peak; the envelope is tried from several starts and
/// the best least-squares solution kept.
pub fn fit_ramsey(delays: &[f64], probs: &[f64]) -> Result<RamseyFit> {
    check_series(delays, probs, 10)?;
    let span = delays[delays.len() - 1] - delays[0];
    let (f0, phi0, peak, median) = spectral_peak(delays, probs);
    if !(peak > 4.0 * median) || peak <= 0.0 {
        return Err(Error::FitFailure("no spectral peak above the floor".into()));
    }
    if f0 * span < 2.0 {
        return Err(Error::FitFailure(format!(
            "fringe {f0:.3e} Hz spans fewer than two periods"
        )));
    }
    let mut best: Option<LmFit> = None;
    for t2 in [0.25, 0.5, 1.0, 2.0].map(|k| k * span) {
        if let Some(fit) = levenberg_marquardt(
            ramsey_model,
            delays,
            probs,
            &[f0, t2, phi0, 0.0],
            &[1.0 / span, span, 1.0, 1.0],
        ) {
            if fit.params[1] > 0.0 && best.as_ref().is_none_or(|b| fit.ssr < b.ssr) {
                best = Some(fit);
            }
        }
    }
    let fit = best.ok_or_else(|| Error::FitFailure("least squares diverged".into()))?;
    let (f, t2) = (fit.params[0], fit.params[1]);
    if !(f > 0.0 && t2 > 0.0 && t2.is_finite()) {
        return Err(Error::FitFailure(format!(
            "unphysical fit f = {f}, T2 = {t2}"
        )));
    }
    Ok(RamseyFit {
        fringe_hz: f,
        t2,
        fringe_stderr: fit.stderr[0],
        t2_stderr: fit.stderr[1],
        phase: fit.params[2].rem_euclid(TAU),
        offset: fit.params[3],
    })
}
