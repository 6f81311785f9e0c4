use serde::{Deserialize, Serialize};

/// Geometric bins over `μ = Ω(E=0) ≥ 1`.
///
/// Bin `b` holds `base^b ≤ μ < base^(b+1)`; with `base ≤ 2` every bin
/// contains at least one integer. The last bin is open-ended so every
/// satisfiable instance has a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuBinning {
    pub base: f64,
    pub top_bin: usize,
}

impl MuBinning {
    pub fn new(base: f64, mu_max: u64) -> Self {
        assert!(base > 1.0 && base <= 2.0, "bin base must lie in (1, 2]");
        let mut b = MuBinning { base, top_bin: usize::MAX };
        b.top_bin = b.raw_bin(mu_max.max(1));
        b
    }

    fn raw_bin(&self, mu: u64) -> usize {
        debug_assert!(mu >= 1);
        let x = (mu as f64).ln() / self.base.ln();
        // Guard against ln rounding just below an exact power.
        let b = (x + 1e-12).floor() as usize;
        b.min(self.top_bin)
    }

    pub fn bin(&self, mu: u64) -> usize {
        self.raw_bin(mu)
    }

    pub fn num_bins(&self) -> usize {
        self.top_bin + 1
    }

    /// Smallest integer μ falling into `bin`.
    pub fn lower_mu(&self, bin: usize) -> u64 {
        (1..).find(|&mu| self.raw_bin(mu) >= bin).expect("bins are unbounded")
    }
}

/// Multicanonical weights `W_MUCA(μ)`, constant within each μ bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MucaWeights {
    pub binning: MuBinning,
    pub values: Vec<f64>,
}

impl MucaWeights {
    pub fn flat(binning: MuBinning) -> Self {
        let values = vec![0.0; binning.num_bins()];
        MucaWeights { binning, values }
    }

    pub fn weight(&self, mu: u64) -> f64 {
        self.values[self.binning.bin(mu)]
    }

    pub fn bin(&self, mu: u64) -> usize {
        self.binning.bin(mu)
    }

    pub fn num_bins(&self) -> usize {
        self.values.len()
    }

    /// Shifts the table so the smallest weight is zero.
    pub fn normalize(&mut self) {
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        self.values.iter_mut().for_each(|w| *w -= min);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_mu_bins_are_individual_and_nonempty() {
        let b = MuBinning::new(1.5, 1 << 12);
        assert_eq!(b.bin(1), 0);
        assert_eq!(b.bin(2), 1);
        assert_eq!(b.bin(3), 2);
        assert_eq!(b.bin(4), 3);
        assert_eq!(b.bin(5), 3);
        let mut seen = vec![false; b.num_bins()];
        for mu in 1..=(1u64 << 12) {
            seen[b.bin(mu)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn top_bin_is_open_ended() {
        let b = MuBinning::new(1.5, 40);
        assert_eq!(b.bin(40), b.top_bin);
        assert_eq!(b.bin(10_000), b.top_bin);
        assert_eq!(b.lower_mu(0), 1);
        assert_eq!(b.lower_mu(3), 4);
    }
}
