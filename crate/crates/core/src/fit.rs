//! Least-squares machinery shared by the gap and distribution fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step size below which the iteration stops.
    pub step_tolerance: f64,
    /// Relative χ² improvement below which the iteration stops.
    pub chi2_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            step_tolerance: 1e-14,
            chi2_tolerance: 1e-15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared (already weighted) residuals.
    pub chi2: f64,
    pub iterations: usize,
    /// `(JᵀJ)⁻¹` at the solution, when it is invertible.
    pub covariance: Option<DMatrix<f64>>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F>(residuals: &F, x: &[f64], r: &[f64], jac: &mut DMatrix<f64>)
where
    F: Fn(&[f64], &mut [f64]) -> bool,
{
    let m = r.len();
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1e-6);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let ok_p = residuals(&xp, &mut rp);
        let ok_m = residuals(&xm, &mut rm);
        for i in 0..m {
            jac[(i, j)] = match (ok_p, ok_m) {
                (true, true) => (rp[i] - rm[i]) / (2.0 * h),
                (true, false) => (rp[i] - r[i]) / h,
                (false, true) => (r[i] - rm[i]) / h,
                (false, false) => 0.0,
            };
        }
    }
}

/// Levenberg-Marquardt on weighted residuals with a central-difference
/// Jacobian. `residuals` fills its output slice and returns `false` when the
/// parameters are outside the model's domain.
pub fn levenberg_marquardt<F>(residuals: F, n_residuals: usize, x0: &[f64], opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64], &mut [f64]) -> bool,
{
    let np = x0.len();
    if n_residuals < np {
        return Err(Error::fit(format!("{n_residuals} residuals cannot determine {np} parameters")));
    }
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n_residuals];
    if !residuals(&x, &mut r) || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit {
            reason: "initial parameters outside model domain".into(),
            trace: vec![x],
        });
    }
    let mut chi2 = sum_sq(&r);
    let mut damping = 1e-3;
    let mut trace = vec![x.clone()];
    let mut jac = DMatrix::<f64>::zeros(n_residuals, np);
    let mut trial = vec![0.0; n_residuals];
    let mut stalls = 0;

    for iter in 0..opts.max_iterations {
        jacobian(&residuals, &x, &r, &mut jac);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);

        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for d in 0..np {
                a[(d, d)] += damping * jtj[(d, d)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                damping *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if residuals(&xn, &mut trial) && trial.iter().all(|v| v.is_finite()) {
                let chi2_new = sum_sq(&trial);
                if chi2_new <= chi2 {
                    let rel_step = step
                        .iter()
                        .zip(&x)
                        .map(|(s, xi)| (s / xi.abs().max(1e-300)).abs())
                        .fold(0.0, f64::max);
                    let rel_gain = (chi2 - chi2_new) / chi2.max(1e-300);
                    x = xn;
                    r.copy_from_slice(&trial);
                    chi2 = chi2_new;
                    damping = (damping / 3.0).max(1e-12);
                    improved = true;
                    trace.push(x.clone());
                    if rel_step < opts.step_tolerance || rel_gain < opts.chi2_tolerance || chi2 == 0.0 {
                        stalls += 1;
                    } else {
                        stalls = 0;
                    }
                    break;
                }
            }
            damping *= 4.0;
            if damping > 1e16 {
                break;
            }
        }
        if !improved || stalls >= 2 {
            jacobian(&residuals, &x, &r, &mut jac);
            let covariance = (jac.transpose() * &jac).try_inverse();
            return Ok(LmResult {
                params: x,
                chi2,
                iterations: iter + 1,
                covariance,
            });
        }
    }
    trace.reverse();
    trace.truncate(10);
    Err(Error::Fit {
        reason: format!("no convergence within {} iterations", opts.max_iterations),
        trace,
    })
}

/// Weighted linear least squares for `y ≈ X β`. Returns the coefficients and
/// their covariance `(Xᵀ W X)⁻¹`.
pub fn weighted_linear_lsq(design: &DMatrix<f64>, y: &[f64], sigma: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (n, p) = design.shape();
    if n != y.len() || n != sigma.len() {
        return Err(Error::Argument("design, data and errors must have equal length".into()));
    }
    let mut a = design.clone();
    let mut b = DVector::from_column_slice(y);
    for i in 0..n {
        if !(sigma[i] > 0.0) {
            return Err(Error::Argument(format!("error bar {i} is not positive")));
        }
        let w = 1.0 / sigma[i];
        for j in 0..p {
            a[(i, j)] *= w;
        }
        b[i] *= w;
    }
    let ata = a.transpose() * &a;
    let cov = ata
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::fit("degenerate design matrix"))?;
    let svd = a.svd(true, true);
    if svd.singular_values.iter().any(|s| *s <= 1e-12 * svd.singular_values.max()) {
        return Err(Error::fit("degenerate design matrix"));
    }
    let beta = svd.solve(&b, 0.0).map_err(|e| Error::fit(e.to_string()))?;
    Ok((beta.iter().copied().collect(), cov))
}

/// Ordinary straight-line fit `y = a + b x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::Argument("line fit needs at least two aligned points".into()));
    }
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let (beta, _) = weighted_linear_lsq(&design, y, &vec![1.0; n])?;
    Ok((beta[0], beta[1]))
}

/// Unweighted polynomial least squares; coefficients in increasing degree.
pub fn poly_fit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n <= degree || n != y.len() {
        return Err(Error::Argument(format!("degree-{degree} fit needs more than {degree} aligned points")));
    }
    let design = DMatrix::from_fn(n, degree + 1, |i, j| x[i].powi(j as i32));
    Ok(weighted_linear_lsq(&design, y, &vec![1.0; n])?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lm_recovers_exponential_decay() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let res = levenberg_marquardt(
            |p, out| {
                for (o, (x, y)) in out.iter_mut().zip(xs.iter().zip(&ys)) {
                    *o = p[0] * (-p[1] * x).exp() - y;
                }
                true
            },
            xs.len(),
            &[1.0, 0.2],
            &LmOptions::default(),
        )
        .unwrap();
        assert!((res.params[0] - 3.0).abs() < 1e-10);
        assert!((res.params[1] - 0.7).abs() < 1e-10);
    }

    #[test]
    fn line_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v).collect();
        let (a, b) = line_fit(&x, &y).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b + 2.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_fit_exact() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.5 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - v + 0.25 * v * v * v).collect();
        let c = poly_fit(&x, &y, 3).unwrap();
        for (got, want) in c.iter().zip([1.0, -1.0, 0.0, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_design_is_rejected() {
        let x = [2.0, 2.0, 2.0];
        assert!(line_fit(&x, &[1.0, 2.0, 3.0]).is_err());
    }
}
