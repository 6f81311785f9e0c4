use crate::error::{Error, Result};

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Argument("samples contain NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Type-7 quantile of sorted data: linear interpolation at `h = (n−1)q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("quantile of an empty sample".into()));
    }
    Ok(quantile_sorted(&sorted(samples)?, q))
}

pub fn median(samples: &[f64]) -> Result<f64> {
    quantile(samples, 0.5)
}

/// D1..D9.
pub fn deciles(samples: &[f64]) -> Result<[f64; 9]> {
    if samples.len() < 10 {
        return Err(Error::Argument(format!("deciles need at least 10 samples, got {}", samples.len())));
    }
    let v = sorted(samples)?;
    Ok(std::array::from_fn(|i| quantile_sorted(&v, (i + 1) as f64 / 10.0)))
}

/// Quantile with a distribution-free error from the order statistics one
/// binomial standard deviation either side of rank `nq`.
pub fn quantile_with_error(samples: &[f64], q: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Argument("quantile error needs at least 2 samples".into()));
    }
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let sd = (n * q * (1.0 - q)).sqrt();
    let at = |rank: f64| quantile_sorted(&v, (rank / (n - 1.0)).clamp(0.0, 1.0));
    let c = q * (n - 1.0);
    let err = 0.5 * (at(c + sd) - at(c - sd));
    Ok((quantile_sorted(&v, q), err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_median() {
        let s: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(median(&s).unwrap(), 5.0);
        let s10: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(deciles(&s10).unwrap()[4], 5.5);
    }

    #[test]
    fn constant_sample() {
        assert!(deciles(&[2.5; 12]).unwrap().iter().all(|&d| d == 2.5));
    }

    #[test]
    fn too_few_samples() {
        assert!(deciles(&[1.0; 9]).is_err());
    }

    #[test]
    fn uniform_deciles() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let d = deciles(&s).unwrap();
        for (i, v) in d.iter().enumerate() {
            assert!((v - (i + 1) as f64 / 10.0).abs() < 0.01);
        }
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn median_error_matches_asymptotics() {
        // For U(0,1) the median has sd 1/(2√n).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let (_, e) = quantile_with_error(&s, 0.5).unwrap();
        assert!((e / 0.005 - 1.0).abs() < 0.2, "{e}");
    }
}
