//! Success probabilities under the Landau-Zener map `P = 1 − e^{−R/Ξ²}` and
//! the exact change of variables from a density of Ξ to a density of P.

use serde::{Deserialize, Serialize};

use super::pdf::PdfFit;
use crate::error::{Error, Result};

/// Grid endpoints stay this far from 0 and 1.
pub const DEFAULT_EPS: f64 = 1e-4;

pub fn lz_success(xi_lz: f64, r: f64) -> f64 {
    -(-r / (xi_lz * xi_lz)).exp_m1()
}

/// Inverse of [`lz_success`].
pub fn lz_xi(p: f64, r: f64) -> f64 {
    (r / -(-p).ln_1p()).sqrt()
}

/// Success after `R` independent repetitions: `1 − (1−P)^R`.
pub fn repeat_success(p: f64, r: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    -(r * (-p).ln_1p()).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneMode {
    /// Values are success probabilities, transformed by repetition.
    Success,
    /// Values are Ξ_LZ, mapped through the Landau-Zener form.
    XiLz,
}

fn mean_at(values: &[f64], mode: TuneMode, r: f64) -> f64 {
    let s: f64 = match mode {
        TuneMode::Success => values.iter().map(|&p| repeat_success(p, r)).sum(),
        TuneMode::XiLz => values.iter().map(|&x| lz_success(x, r)).sum(),
    };
    s / values.len() as f64
}

/// The `R` at which the mean success over `values` is one half.
pub fn tune_r(values: &[f64], mode: TuneMode) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("tune_r needs at least one value".into()));
    }
    match mode {
        TuneMode::Success => {
            if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Argument("success probabilities must lie in [0, 1]".into()));
            }
        }
        TuneMode::XiLz => {
            if values.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::Argument("Ξ values must be positive and finite".into()));
            }
        }
    }
    let f = |ln_r: f64| mean_at(values, mode, ln_r.exp()) - 0.5;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while f(lo) > 0.0 {
        lo -= 4.0;
        if lo < -700.0 {
            return Err(Error::Domain("mean success exceeds one half for every R".into()));
        }
    }
    while f(hi) < 0.0 {
        hi += 4.0;
        if hi > 700.0 {
            return Err(Error::Domain("mean success stays below one half for every R".into()));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// A density of Ξ_LZ: fitted or tabulated (linear interpolation, zero
/// outside the table).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum XiDensity {
    Parametric(PdfFit),
    Tabulated { xi: Vec<f64>, density: Vec<f64> },
}

impl XiDensity {
    pub fn density(&self, x: f64) -> f64 {
        match self {
            XiDensity::Parametric(f) => f.density(x),
            XiDensity::Tabulated { xi, density } => {
                if xi.is_empty() || x < xi[0] || x > xi[xi.len() - 1] {
                    return 0.0;
                }
                let j = xi.partition_point(|&v| v <= x).clamp(1, xi.len() - 1);
                let t = (x - xi[j - 1]) / (xi[j] - xi[j - 1]);
                density[j - 1] + t * (density[j] - density[j - 1])
            }
        }
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        match self {
            XiDensity::Parametric(f) => Some(f.cdf(x)),
            XiDensity::Tabulated { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessPdf {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub r_used: f64,
    /// Mass below the first and above the last grid point, when known.
    pub tail_low: Option<f64>,
    pub tail_high: Option<f64>,
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

impl SuccessPdf {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Mean success probability, including the tails when they are known.
    pub fn mean(&self) -> f64 {
        let py: Vec<f64> = self.grid.iter().zip(&self.density).map(|(p, d)| p * d).collect();
        let inner = trapezoid(&self.grid, &py);
        match (self.tail_low, self.tail_high) {
            (Some(tl), Some(th)) => {
                let g0 = self.grid[0];
                let g1 = self.grid[self.grid.len() - 1];
                (1.0 - tl - th) * inner + tl * 0.5 * g0 + th * 0.5 * (1.0 + g1)
            }
            _ => inner,
        }
    }
}

pub fn uniform_grid(points: usize, eps: f64) -> Vec<f64> {
    (0..points)
        .map(|i| eps + (1.0 - 2.0 * eps) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Points equally spaced in `ln(P/(1−P))`, dense near both ends.
pub fn logit_grid(points: usize, eps: f64) -> Vec<f64> {
    let t0 = (eps / (1.0 - eps)).ln();
    (0..points)
        .map(|i| {
            let t = t0 * (1.0 - 2.0 * i as f64 / (points - 1) as f64);
            1.0 / (1.0 + (-t).exp())
        })
        .collect()
}

/// Density of `P = 1 − e^{−R/Ξ²}` given a density of Ξ, normalized on `grid`.
pub fn fold_success_pdf(input: &XiDensity, r: f64, grid: &[f64]) -> Result<SuccessPdf> {
    if !(r > 0.0) {
        return Err(Error::Argument("R must be positive".into()));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) || !(grid[grid.len() - 1] < 1.0) {
        return Err(Error::Argument("grid must be increasing and strictly inside (0, 1)".into()));
    }
    let raw: Vec<f64> = grid
        .iter()
        .map(|&p| {
            let u = -(-p).ln_1p();
            let xi = (r / u).sqrt();
            // |dΞ/dP| = ½ √R u^{−3/2} / (1−P)
            input.density(xi) * 0.5 * r.sqrt() * u.powf(-1.5) / (1.0 - p)
        })
        .collect();
    let z = trapezoid(grid, &raw);
    if !z.is_finite() || raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("folded density overflows on the grid; move the endpoints inward".into()));
    }
    if !(z > 0.0) {
        return Err(Error::Domain("folded density vanishes on the grid".into()));
    }
    let g0 = grid[0];
    let g1 = grid[grid.len() - 1];
    let tail_low = input.cdf(lz_xi(g0, r)).map(|c| 1.0 - c);
    let tail_high = input.cdf(lz_xi(g1, r));
    Ok(SuccessPdf {
        grid: grid.to_vec(),
        density: raw.iter().map(|v| v / z).collect(),
        r_used: r,
        tail_low,
        tail_high,
    })
}

/// Indices of local maxima; an endpoint counts when it exceeds its
/// neighbour.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    if values[0] > values[1] {
        out.push(0);
    }
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if values[n - 1] > values[n - 2] {
        out.push(n - 1);
    }
    out
}
