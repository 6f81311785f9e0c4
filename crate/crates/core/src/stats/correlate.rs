use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, poly_fit};

/// Counts on `[0,1]²` divided by the largest bin. Row index follows the
/// first list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleHistogram {
    pub bins: usize,
    pub values: Vec<Vec<f64>>,
}

pub fn double_histogram(p_sa: &[f64], p_qa: &[f64], bins: usize) -> Result<DoubleHistogram> {
    if p_sa.len() != p_qa.len() {
        return Err(Error::Argument(format!("lists of length {} and {} are not aligned", p_sa.len(), p_qa.len())));
    }
    if bins == 0 || p_sa.is_empty() {
        return Err(Error::Argument("double histogram needs bins and data".into()));
    }
    let idx = |p: f64| ((p.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
    let mut counts = vec![vec![0u64; bins]; bins];
    for (&a, &b) in p_sa.iter().zip(p_qa) {
        counts[idx(a)][idx(b)] += 1;
    }
    let max = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    Ok(DoubleHistogram {
        bins,
        values: counts.iter().map(|row| row.iter().map(|&c| c as f64 / max).collect()).collect(),
    })
}

/// Cubic fit of `ln τ` against `ln ξ`, centred for conditioning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSlope {
    pub coeffs: [f64; 4],
    pub center: f64,
    pub ln_xi_range: [f64; 2],
}

impl LogSlope {
    /// `d ln τ / d ln ξ` at `ln ξ`.
    pub fn slope(&self, ln_xi: f64) -> f64 {
        let t = ln_xi - self.center;
        let c = &self.coeffs;
        c[1] + 2.0 * c[2] * t + 3.0 * c[3] * t * t
    }

    pub fn slope_at_xi(&self, xi: f64) -> f64 {
        self.slope(xi.ln())
    }
}

pub fn log_slope(tau: &[f64], xi: &[f64]) -> Result<LogSlope> {
    if tau.len() != xi.len() {
        return Err(Error::Argument("τ and ξ lists are not aligned".into()));
    }
    if tau.len() < 20 {
        return Err(Error::fit(format!("log slope needs 20 pairs, got {}", tau.len())));
    }
    if tau.iter().chain(xi).any(|v| !(*v > 0.0)) {
        return Err(Error::Argument("τ and ξ must be positive".into()));
    }
    let lx: Vec<f64> = xi.iter().map(|v| v.ln()).collect();
    let lt: Vec<f64> = tau.iter().map(|v| v.ln()).collect();
    let lo = lx.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < std::f64::consts::LN_10 {
        return Err(Error::fit("ξ spans less than one decade"));
    }
    let center = 0.5 * (lo + hi);
    let xs: Vec<f64> = lx.iter().map(|v| v - center).collect();
    let c = poly_fit(&xs, &lt, 3)?;
    Ok(LogSlope {
        coeffs: [c[0], c[1], c[2], c[3]],
        center,
        ln_xi_range: [lo, hi],
    })
}

/// `τ_SA = A·Ω₁^{1+Δα}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaDosFit {
    pub amplitude: f64,
    pub delta_alpha: f64,
}

pub fn sa_dos_fit(tau_sa: &[f64], omega1: &[f64]) -> Result<SaDosFit> {
    if tau_sa.len() != omega1.len() || tau_sa.len() < 2 {
        return Err(Error::Argument("need aligned lists of at least two points".into()));
    }
    if tau_sa.iter().chain(omega1).any(|v| !(*v > 0.0)) {
        return Err(Error::Argument("τ and Ω₁ must be positive".into()));
    }
    let lx: Vec<f64> = omega1.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = tau_sa.iter().map(|v| v.ln()).collect();
    let (a, b) = line_fit(&lx, &ly)?;
    Ok(SaDosFit {
        amplitude: a.exp(),
        delta_alpha: b - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_lists_stay_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let h = double_histogram(&p, &p, 10).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    assert_eq!(h.values[i][j], 0.0);
                }
            }
        }
        assert_eq!(h.values.iter().flatten().cloned().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn independent_lists_are_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
        let h = double_histogram(&a, &b, 5).unwrap();
        assert!(h.values.iter().flatten().all(|&v| v > 0.9 && v <= 1.0));
        assert!(double_histogram(&a, &b[1..], 5).is_err());
    }

    #[test]
    fn pure_power_slopes() {
        let xi: Vec<f64> = (0..30).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        for power in [2.0, 2.3] {
            let tau: Vec<f64> = xi.iter().map(|x| 1.7 * x.powf(power)).collect();
            let s = log_slope(&tau, &xi).unwrap();
            for x in &xi {
                assert!((s.slope_at_xi(*x) - power).abs() < 1e-9);
            }
        }
        assert!(log_slope(&xi[..10], &xi[..10]).is_err());
        let narrow: Vec<f64> = (0..30).map(|i| 1.0 + i as f64 * 0.1).collect();
        assert!(log_slope(&narrow, &narrow).is_err());
    }

    #[test]
    fn sa_dos_examples() {
        let om: Vec<f64> = (1..20).map(|i| (i * i) as f64).collect();
        let f = sa_dos_fit(&om.iter().map(|o| 2.0 * o).collect::<Vec<_>>(), &om).unwrap();
        assert!(f.delta_alpha.abs() < 1e-12 && (f.amplitude - 2.0).abs() < 1e-10);
        let f = sa_dos_fit(&om.iter().map(|o: &f64| o.powf(0.84)).collect::<Vec<_>>(), &om).unwrap();
        assert!((f.delta_alpha + 0.16).abs() < 1e-12);
        assert!(sa_dos_fit(&[1.0, 2.0], &[3.0, 3.0]).is_err());
    }
}
