use serde::{Deserialize, Serialize};

use super::scan::GapProfile;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

/// Avoided-crossing form `ΔE(λ) = √(g² + (s·(λ−λc))²)`.
pub fn lz_gap(lambda: f64, gap_min: f64, lambda_c: f64, slope: f64) -> f64 {
    let d = slope * (lambda - lambda_c);
    (gap_min * gap_min + d * d).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LzFitOptions {
    pub critical_r: f64,
    pub min_points: usize,
    /// Largest relative change of the gap allowed when the window is halved.
    pub max_halving_shift: f64,
    /// Relative error assigned to each gap value.
    pub rel_sigma: f64,
}

impl Default for LzFitOptions {
    fn default() -> Self {
        LzFitOptions {
            critical_r: 1.5,
            min_points: 10,
            max_halving_shift: 1e-3,
            rel_sigma: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LzFit {
    pub gap_min: f64,
    pub lambda_c: f64,
    pub slope: f64,
    pub chi2_dof: f64,
    pub window: [f64; 2],
    pub points: usize,
    /// Gap fitted on the window halved around λc.
    pub halved_gap_min: f64,
    pub halving_shift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaMetrics {
    pub xi_gap: f64,
    pub tau_qa: f64,
    pub xi_lz: f64,
}

pub fn qa_metrics(fit: &LzFit) -> QaMetrics {
    qa_from(fit.gap_min, fit.slope)
}

pub fn qa_from(gap_min: f64, slope: f64) -> QaMetrics {
    let tau_qa = slope / (gap_min * gap_min);
    QaMetrics {
        xi_gap: 1.0 / gap_min,
        tau_qa,
        xi_lz: tau_qa.sqrt(),
    }
}

struct WindowFit {
    params: [f64; 3],
    chi2: f64,
    points: usize,
}

fn select(profile: &GapProfile, lo: f64, hi: f64) -> Vec<usize> {
    (0..profile.len())
        .filter(|&i| profile.lambdas[i] >= lo && profile.lambdas[i] <= hi)
        .collect()
}

fn fit_window(profile: &GapProfile, idx: &[usize], start: [f64; 3], sigma: &dyn Fn(f64) -> f64) -> Result<WindowFit> {
    let xs: Vec<f64> = idx.iter().map(|&i| profile.lambdas[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| profile.gaps[i]).collect();
    let ws: Vec<f64> = ys.iter().map(|&y| 1.0 / sigma(y)).collect();
    // Gap and slope are fitted through their logarithms to stay positive.
    let x0 = [start[0].ln(), start[1], start[2].ln()];
    let res = levenberg_marquardt(
        |p, out| {
            let (g, lc, s) = (p[0].exp(), p[1], p[2].exp());
            for i in 0..xs.len() {
                out[i] = (lz_gap(xs[i], g, lc, s) - ys[i]) * ws[i];
            }
            true
        },
        xs.len(),
        &x0,
        &LmOptions::default(),
    )?;
    Ok(WindowFit {
        params: [res.params[0].exp(), res.params[1], res.params[2].exp()],
        chi2: res.chi2,
        points: xs.len(),
    })
}

pub fn fit_lz(profile: &GapProfile) -> Result<LzFit> {
    fit_lz_with(profile, &LzFitOptions::default())
}

/// Nonlinear least squares of the avoided-crossing form over the critical
/// window, followed by a refit on the halved window as a stability check.
pub fn fit_lz_with(profile: &GapProfile, opts: &LzFitOptions) -> Result<LzFit> {
    if profile.len() < 4 {
        return Err(Error::fit("profile has fewer than four points"));
    }
    let tol = profile.solver_tol;
    let sigma = |y: f64| (opts.rel_sigma * y.abs()).max(tol);

    let i = profile.argmin();
    let g0 = profile.gaps[i];
    if !(g0 > 0.0) {
        return Err(Error::fit("non-positive gap at the profile minimum"));
    }
    let mut slopes = Vec::new();
    for j in [i.wrapping_sub(1), i + 1] {
        if j < profile.len() {
            let d = (profile.gaps[j].powi(2) - g0 * g0).max(0.0).sqrt();
            let dl = (profile.lambdas[j] - profile.lambdas[i]).abs();
            if d > 0.0 && dl > 0.0 {
                slopes.push(d / dl);
            }
        }
    }
    if slopes.is_empty() {
        return Err(Error::fit("no secant slope around the minimum"));
    }
    let mut params = [g0, profile.lambdas[i], slopes.iter().sum::<f64>() / slopes.len() as f64];

    let window = |p: &[f64; 3], scale: f64| {
        let half = 0.5 * scale * opts.critical_r * p[0] / p[2];
        [p[1] - half, p[1] + half]
    };
    let mut trace = vec![params.to_vec()];
    let mut idx: Vec<usize> = Vec::new();
    let mut fit = None;
    for _ in 0..20 {
        let w = window(&params, 1.0);
        let next = select(profile, w[0], w[1]);
        if next.len() < opts.min_points {
            return Err(Error::Fit {
                reason: format!("critical window holds {} points, need {}", next.len(), opts.min_points),
                trace,
            });
        }
        if next == idx {
            break;
        }
        idx = next;
        let f = fit_window(profile, &idx, params, &sigma)?;
        params = f.params;
        trace.push(params.to_vec());
        fit = Some(f);
    }
    let fit = fit.expect("at least one window fit");
    let w = window(&params, 1.0);
    if params[1] < w[0] || params[1] > w[1] || !(0.0..=1.0).contains(&params[1]) {
        return Err(Error::Fit { reason: "crossing lies outside its window".into(), trace });
    }

    let hw = window(&params, 0.5);
    let half_idx = select(profile, hw[0], hw[1]);
    if half_idx.len() < 5 {
        return Err(Error::Fit {
            reason: format!("halved window holds only {} points", half_idx.len()),
            trace,
        });
    }
    let half = fit_window(profile, &half_idx, params, &sigma)?;
    let shift = (half.params[0] - params[0]).abs() / params[0];
    trace.push(half.params.to_vec());
    if shift > opts.max_halving_shift {
        return Err(Error::Fit {
            reason: format!("gap moved by {:.3e} relative when the window was halved", shift),
            trace,
        });
    }
    let dof = fit.points.saturating_sub(3).max(1);
    Ok(LzFit {
        gap_min: params[0],
        lambda_c: params[1],
        slope: params[2],
        chi2_dof: fit.chi2 / dof as f64,
        window: w,
        points: fit.points,
        halved_gap_min: half.params[0],
        halving_shift: shift,
    })
}
