use serde::{Deserialize, Serialize};

use super::histogram::Histogram;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdfFamily {
    Weibull,
    Frechet,
}

impl PdfFamily {
    /// Normalized density.
    pub fn density(self, k: f64, x0: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = x / x0;
        match self {
            PdfFamily::Weibull => k / x0 * z.powf(k - 1.0) * (-z.powf(k)).exp(),
            PdfFamily::Frechet => k / x0 * z.powf(-1.0 - k) * (-z.powf(-k)).exp(),
        }
    }

    pub fn cdf(self, k: f64, x0: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = x / x0;
        match self {
            PdfFamily::Weibull => -(-z.powf(k)).exp_m1(),
            PdfFamily::Frechet => (-z.powf(-k)).exp(),
        }
    }

    /// Probability mass in `[a, b]`, computed without cancellation in the
    /// far tail.
    pub fn mass(self, k: f64, x0: f64, a: f64, b: f64) -> f64 {
        let e = |x: f64, s: f64| if x <= 0.0 { if s > 0.0 { 0.0 } else { f64::INFINITY } } else { (x / x0).powf(s) };
        match self {
            PdfFamily::Weibull => (-e(a, k)).exp() - (-e(b, k)).exp(),
            PdfFamily::Frechet => (-e(b, -k)).exp() - (-e(a, -k)).exp(),
        }
    }

    /// Inverse CDF.
    pub fn quantile(self, k: f64, x0: f64, u: f64) -> f64 {
        match self {
            PdfFamily::Weibull => x0 * (-(-u).ln_1p()).powf(1.0 / k),
            PdfFamily::Frechet => x0 * (-u.ln()).powf(-1.0 / k),
        }
    }

    pub fn median(self, k: f64, x0: f64) -> f64 {
        self.quantile(k, x0, 0.5)
    }
}

/// Fit of `A0·(x/x0)^(k−1)·e^{−(x/x0)^k}` (Weibull) or
/// `A0·(x/x0)^(−1−k)·e^{−(x/x0)^(−k)}` (Frechet) to histogram counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdfFit {
    pub family: PdfFamily,
    pub k: f64,
    pub x0: f64,
    pub amplitude: f64,
    pub chi2_dof: f64,
    pub k_err: f64,
    pub x0_err: f64,
}

impl PdfFit {
    pub fn density(&self, x: f64) -> f64 {
        self.family.density(self.k, self.x0, x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.family.cdf(self.k, self.x0, x)
    }
}

/// Expected counts: the printed form averaged over each bin.
fn model(family: PdfFamily, p: &[f64], hist: &Histogram, out: &mut [f64]) {
    let (a0, k, x0) = (p[0].exp(), p[1].exp(), p[2].exp());
    for (j, o) in out.iter_mut().enumerate() {
        let (a, b) = (hist.edges[j], hist.edges[j + 1]);
        *o = a0 * x0 / k * family.mass(k, x0, a, b) / (b - a);
    }
}

/// Median from cumulative bin counts.
fn binned_median(hist: &Histogram) -> f64 {
    let total: u64 = hist.counts.iter().sum();
    let half = total as f64 / 2.0;
    let mut acc = 0.0;
    for (j, &c) in hist.counts.iter().enumerate() {
        if acc + c as f64 >= half && c > 0 {
            let frac = (half - acc) / c as f64;
            return hist.edges[j] + frac * (hist.edges[j + 1] - hist.edges[j]);
        }
        acc += c as f64;
    }
    hist.edges[hist.edges.len() - 1]
}

/// χ² fit against bin counts with their `√m` errors, from several starting
/// shapes.
pub fn fit_pdf(hist: &Histogram, family: PdfFamily) -> Result<PdfFit> {
    if hist.nonempty_bins() < 5 {
        return Err(Error::Argument(format!("PDF fit needs 5 non-empty bins, got {}", hist.nonempty_bins())));
    }
    if hist.edges[0] < 0.0 {
        return Err(Error::Argument("PDF families live on x > 0".into()));
    }
    let nb = hist.bins();
    let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let residuals = |p: &[f64], out: &mut [f64]| {
        if p.iter().any(|v| !v.is_finite() || v.abs() > 50.0) {
            return false;
        }
        model(family, p, hist, out);
        for j in 0..nb {
            out[j] = (out[j] - counts[j]) / hist.errors[j];
        }
        true
    };
    let med = binned_median(hist).max(1e-300);
    let binned: f64 = counts.iter().sum();
    let mut best: Option<(f64, Vec<f64>, Option<nalgebra::DMatrix<f64>>)> = None;
    let mut trace = Vec::new();
    let mut buf = vec![0.0; nb];
    for &k in &[0.6, 1.0, 1.5, 2.5, 4.0] {
        let x0 = match family {
            PdfFamily::Weibull => med / std::f64::consts::LN_2.powf(1.0 / k),
            PdfFamily::Frechet => med * std::f64::consts::LN_2.powf(1.0 / k),
        };
        let mass = family.mass(k, x0, hist.edges[0], hist.edges[nb]);
        if !(mass > 0.0) {
            continue;
        }
        let a0 = binned * hist.width() * k / (x0 * mass);
        let start = [a0.ln(), k.ln(), x0.ln()];
        trace.push(start.to_vec());
        if !residuals(&start, &mut buf) {
            continue;
        }
        if let Ok(res) = levenberg_marquardt(residuals, nb, &start, &LmOptions::default()) {
            trace.push(res.params.clone());
            if best.as_ref().is_none_or(|b| res.chi2 < b.0) {
                best = Some((res.chi2, res.params, res.covariance));
            }
        }
    }
    let Some((chi2, p, cov)) = best else {
        return Err(Error::Fit { reason: "no starting point converged".into(), trace });
    };
    let dof = nb.saturating_sub(3).max(1);
    let (k, x0) = (p[1].exp(), p[2].exp());
    let (k_err, x0_err) = match cov {
        Some(c) => (k * c[(1, 1)].max(0.0).sqrt(), x0 * c[(2, 2)].max(0.0).sqrt()),
        None => (f64::NAN, f64::NAN),
    };
    Ok(PdfFit {
        family,
        k,
        x0,
        amplitude: p[0].exp(),
        chi2_dof: chi2 / dof as f64,
        k_err,
        x0_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::histogram::{histogram, histogram_range};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draws(family: PdfFamily, k: f64, x0: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| family.quantile(k, x0, rng.random::<f64>())).collect()
    }

    #[test]
    fn densities_integrate_to_cdf() {
        for fam in [PdfFamily::Weibull, PdfFamily::Frechet] {
            let (k, x0) = (1.7, 2.0);
            let n = 200_000;
            let (a, b) = (0.5, 4.0);
            let h = (b - a) / n as f64;
            let integral: f64 = (0..n).map(|i| fam.density(k, x0, a + (i as f64 + 0.5) * h) * h).sum();
            assert!((integral - fam.mass(k, x0, a, b)).abs() < 1e-9);
            assert!((fam.cdf(k, x0, fam.median(k, x0)) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn weibull_shape_recovered() {
        let s = draws(PdfFamily::Weibull, 1.5, 1.0, 100_000, 1);
        let f = fit_pdf(&histogram(&s, 12).unwrap(), PdfFamily::Weibull).unwrap();
        assert!((f.k - 1.5).abs() < 0.05, "{f:?}");
        assert!(f.chi2_dof.is_finite());
    }

    #[test]
    fn exponential_scale_is_mean() {
        let s = draws(PdfFamily::Weibull, 1.0, 3.0, 100_000, 2);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let f = fit_pdf(&histogram(&s, 12).unwrap(), PdfFamily::Weibull).unwrap();
        assert!((f.x0 / mean - 1.0).abs() < 0.02, "{} vs {mean}", f.x0);
    }

    #[test]
    fn frechet_on_truncated_range() {
        let s = draws(PdfFamily::Frechet, 2.0, 1.0, 100_000, 3);
        let hi = crate::stats::quantile(&s, 0.99).unwrap();
        let h = histogram_range(&s, 12, 0.0, hi).unwrap();
        let f = fit_pdf(&h, PdfFamily::Frechet).unwrap();
        assert!((f.k - 2.0).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn too_few_bins() {
        let h = histogram(&[1.0, 1.0, 1.0, 5.0], 12).unwrap();
        assert!(fit_pdf(&h, PdfFamily::Weibull).is_err());
    }
}
