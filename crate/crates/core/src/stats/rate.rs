use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::weighted_linear_lsq;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub value: f64,
    pub error: f64,
}

/// How points are weighted in an exponential rate fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateWeighting {
    /// Each point weighted by its own error bar.
    #[default]
    PointErrors,
    /// Equal weights; the scatter of the residuals sets the scale.
    Residuals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    /// ln A in `value ≈ A·e^{rate·N}`.
    pub amplitude: f64,
    pub chi2_dof: f64,
    /// Leave-one-N-out jackknife error of the rate.
    pub rate_err: f64,
    /// Error of the rate from the fit covariance.
    pub rate_err_fit: f64,
    pub n_min: usize,
    pub points: usize,
}

fn solve(points: &[RatePoint], weighting: RateWeighting) -> Result<(f64, f64, f64, f64)> {
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let sig: Vec<f64> = points.iter().map(|p| p.error / p.value).collect();
    let w: Vec<f64> = match weighting {
        RateWeighting::PointErrors => sig.clone(),
        RateWeighting::Residuals => vec![1.0; points.len()],
    };
    let design = DMatrix::from_fn(points.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let (beta, cov) = weighted_linear_lsq(&design, &ys, &w)?;
    let chi2: f64 = (0..points.len())
        .map(|i| ((ys[i] - beta[0] - beta[1] * xs[i]) / sig[i]).powi(2))
        .sum();
    let dof = points.len().saturating_sub(2);
    let chi2_dof = if dof > 0 { chi2 / dof as f64 } else { f64::NAN };
    let mut var_rate = cov[(1, 1)];
    if weighting == RateWeighting::Residuals && dof > 0 {
        let rss: f64 = (0..points.len()).map(|i| (ys[i] - beta[0] - beta[1] * xs[i]).powi(2)).sum();
        var_rate *= rss / dof as f64;
    }
    Ok((beta[1], beta[0], chi2_dof, var_rate.sqrt()))
}

pub fn fit_rate(points: &[RatePoint], n_min: usize) -> Result<RateFit> {
    fit_rate_with(points, n_min, RateWeighting::PointErrors)
}

/// Least squares of `ln value` against N over points with `N ≥ n_min`.
pub fn fit_rate_with(points: &[RatePoint], n_min: usize, weighting: RateWeighting) -> Result<RateFit> {
    let used: Vec<RatePoint> = points.iter().copied().filter(|p| p.n >= n_min).collect();
    if used.len() < 3 {
        return Err(Error::Argument(format!("rate fit needs 3 points with N ≥ {n_min}, got {}", used.len())));
    }
    if let Some(p) = used.iter().find(|p| !(p.value > 0.0) || !(p.error > 0.0)) {
        return Err(Error::Argument(format!("point at N={} must have positive value and error", p.n)));
    }
    let mut levels: Vec<usize> = used.iter().map(|p| p.n).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::fit("all points share one N"));
    }
    let (rate, amplitude, chi2_dof, rate_err_fit) = solve(&used, weighting)?;
    let rate_err = if levels.len() >= 3 {
        let reps: Vec<f64> = levels
            .iter()
            .map(|&drop| {
                let sub: Vec<RatePoint> = used.iter().copied().filter(|p| p.n != drop).collect();
                solve(&sub, weighting).map(|r| r.0)
            })
            .collect::<Result<_>>()?;
        let l = reps.len() as f64;
        let mean = reps.iter().sum::<f64>() / l;
        ((l - 1.0) / l * reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>()).sqrt()
    } else {
        rate_err_fit
    };
    Ok(RateFit {
        rate,
        amplitude,
        chi2_dof,
        rate_err,
        rate_err_fit,
        n_min,
        points: used.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_exponential() {
        let pts: Vec<RatePoint> = (6..=14)
            .map(|n| RatePoint { n, value: 0.7 * (0.329 * n as f64).exp(), error: 0.01 })
            .collect();
        let f = fit_rate(&pts, 8).unwrap();
        assert!((f.rate - 0.329).abs() < 1e-12);
        assert!((f.amplitude - 0.7f64.ln()).abs() < 1e-10);
        assert_eq!(f.points, 7);
        assert!(f.chi2_dof < 1e-20);
    }

    #[test]
    fn noisy_rate_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise = Normal::new(0.0, 0.03).unwrap();
        for weighting in [RateWeighting::PointErrors, RateWeighting::Residuals] {
            let pts: Vec<RatePoint> = (10..=18)
                .map(|n| {
                    let v = (0.33 * n as f64).exp() * (1.0 + noise.sample(&mut rng));
                    RatePoint { n, value: v, error: 0.03 * v }
                })
                .collect();
            let f = fit_rate_with(&pts, 10, weighting).unwrap();
            assert!((f.rate - 0.33).abs() < 0.02, "{f:?}");
            assert!(f.rate_err > 0.0 && f.chi2_dof.is_finite());
        }
    }

    #[test]
    fn degenerate_design() {
        let pts = vec![RatePoint { n: 10, value: 1.0, error: 0.1 }; 4];
        assert!(matches!(fit_rate(&pts, 0), Err(Error::Fit { .. })));
        assert!(fit_rate(&pts[..2], 0).is_err());
    }
}
