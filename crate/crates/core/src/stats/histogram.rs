use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 12;

/// Equal-width histogram with `√m` errors (1 for empty bins).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub errors: Vec<f64>,
    /// Samples outside the binned range.
    pub overflow: u64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn nonempty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Bins over `[0, max·(1+1e−9)]`.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::Argument("histogram of an empty sample".into()));
    }
    if samples.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Argument("histogram samples must be finite and non-negative".into()));
    }
    let max = samples.iter().cloned().fold(0.0, f64::max);
    let hi = if max > 0.0 { max * (1.0 + 1e-9) } else { 1.0 };
    histogram_range(samples, bins, 0.0, hi)
}

/// Bins over `[lo, hi)`; samples outside go to `overflow`.
pub fn histogram_range(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::Argument(format!("invalid histogram range [{lo}, {hi}) with {bins} bins")));
    }
    let w = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
    let mut counts = vec![0u64; bins];
    let mut overflow = 0;
    for &x in samples {
        if x >= lo && x < hi {
            let b = (((x - lo) / w) as usize).min(bins - 1);
            counts[b] += 1;
        } else {
            overflow += 1;
        }
    }
    let errors = counts.iter().map(|&m| if m == 0 { 1.0 } else { (m as f64).sqrt() }).collect();
    Ok(Histogram { edges, counts, errors, overflow })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_errors() {
        let s = [0.0, 0.1, 0.5, 1.0, 1.0, 2.0];
        let h = histogram(&s, 4).unwrap();
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.counts.iter().sum::<u64>(), 6);
        assert_eq!(h.counts[3], 1);
        assert_eq!(h.overflow, 0);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        assert!(h.counts.iter().zip(&h.errors).all(|(&c, &e)| if c == 0 { e == 1.0 } else { e == (c as f64).sqrt() }));
    }

    #[test]
    fn range_overflow() {
        let h = histogram_range(&[0.5, 1.5, 2.5, 9.0], 12, 0.0, 3.0).unwrap();
        assert_eq!(h.total(), 4);
        assert_eq!(h.overflow, 1);
    }

    #[test]
    fn rejects_negative() {
        assert!(histogram(&[-1.0, 2.0], 12).is_err());
    }
}
