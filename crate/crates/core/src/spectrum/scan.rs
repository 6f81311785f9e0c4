use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hamiltonian::QacFamily;
use super::lanczos::{low_levels, LanczosOptions, LowLevels, DEFAULT_TOL};
use crate::error::Result;
use crate::sat::Problem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanPolicy {
    /// The coarse grid has spacing `1/coarse_intervals`.
    pub coarse_intervals: usize,
    pub refine_factor: usize,
    /// Critical-region width in units of `gap/slope`.
    pub critical_r: f64,
    pub min_critical_points: usize,
    pub max_passes: usize,
    pub tol: f64,
    pub max_basis: usize,
    pub keep: usize,
    pub max_matvecs: usize,
    pub seed: u64,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        ScanPolicy {
            coarse_intervals: 128,
            refine_factor: 4,
            critical_r: 2.0,
            min_critical_points: 20,
            max_passes: 10,
            tol: DEFAULT_TOL,
            max_basis: 40,
            keep: 12,
            max_matvecs: 20_000,
            seed: 0x5eed,
        }
    }
}

impl ScanPolicy {
    fn lanczos(&self) -> LanczosOptions {
        LanczosOptions {
            tol: self.tol,
            max_basis: self.max_basis,
            keep: self.keep,
            max_matvecs: self.max_matvecs,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub lambdas: Vec<f64>,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub gaps: Vec<f64>,
    pub solver_tol: f64,
    /// Interior local minima of the gap on the final grid.
    pub local_minima: usize,
    pub refine_passes: usize,
    /// Points inside the final critical-region estimate.
    pub critical_points: usize,
    /// Set when the profile is unusable as a single avoided crossing.
    pub anomalies: Vec<String>,
    pub matvecs: usize,
}

impl GapProfile {
    pub fn from_points(lambdas: Vec<f64>, e0: Vec<f64>, e1: Vec<f64>, solver_tol: f64) -> Self {
        let gaps = e0.iter().zip(&e1).map(|(a, b)| b - a).collect();
        let mut p = GapProfile {
            lambdas,
            e0,
            e1,
            gaps,
            solver_tol,
            local_minima: 0,
            refine_passes: 0,
            critical_points: 0,
            anomalies: Vec::new(),
            matvecs: 0,
        };
        p.local_minima = count_local_minima(&p.gaps, 10.0 * solver_tol);
        p
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn argmin(&self) -> usize {
        (0..self.gaps.len())
            .min_by(|&a, &b| self.gaps[a].total_cmp(&self.gaps[b]))
            .unwrap_or(0)
    }

    fn gap_at(&self, lambda: f64) -> Option<f64> {
        self.lambdas.iter().position(|&l| l == lambda).map(|i| self.gaps[i])
    }

    pub fn gap_at_start(&self) -> Option<f64> {
        self.gap_at(0.0)
    }

    pub fn gap_at_end(&self) -> Option<f64> {
        self.gap_at(1.0)
    }

    pub fn is_flagged(&self) -> bool {
        !self.anomalies.is_empty()
    }
}

/// Interior points lower than both neighbours by more than `margin`.
pub fn count_local_minima(gaps: &[f64], margin: f64) -> usize {
    gaps.windows(3)
        .filter(|w| w[1] + margin < w[0] && w[1] + margin < w[2])
        .count()
}

/// Avoided-crossing parameters `(gap, λc, slope)` read off the points around
/// the grid minimum, from a quadratic fit of ΔE² when it is well posed.
pub(crate) fn local_lz_estimate(lambdas: &[f64], gaps: &[f64]) -> (f64, f64, f64) {
    let i = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
    let g = gaps[i];
    let l = lambdas[i];
    let lo = i.saturating_sub(2);
    let hi = (i + 3).min(gaps.len());
    if hi - lo >= 3 {
        let xs: Vec<f64> = lambdas[lo..hi].iter().map(|x| x - l).collect();
        let ys: Vec<f64> = gaps[lo..hi].iter().map(|y| y * y).collect();
        if let Ok(c) = crate::fit::poly_fit(&xs, &ys, 2) {
            if c[2] > 0.0 {
                let shift = -c[1] / (2.0 * c[2]);
                let g2 = c[0] - c[1] * c[1] / (4.0 * c[2]);
                if g2 > 0.0 && shift.abs() <= (xs[xs.len() - 1] - xs[0]) {
                    return (g2.sqrt(), l + shift, c[2].sqrt());
                }
            }
        }
    }
    // Secant fallback on the V shape around the minimum.
    let mut slopes = Vec::new();
    for j in [i.wrapping_sub(1), i + 1] {
        if j < gaps.len() {
            let d = (gaps[j] * gaps[j] - g * g).max(0.0).sqrt();
            let dl = (lambdas[j] - l).abs();
            if dl > 0.0 && d > 0.0 {
                slopes.push(d / dl);
            }
        }
    }
    let s = if slopes.is_empty() { 1.0 } else { slopes.iter().sum::<f64>() / slopes.len() as f64 };
    (0.5 * g, l, s)
}

struct Scanner<F> {
    solve: F,
    rng: ChaCha8Rng,
    points: Vec<(f64, f64, f64)>,
    best: Option<(f64, LowLevels)>,
    last: Option<(f64, LowLevels)>,
    matvecs: usize,
    tol_used: f64,
}

impl<F> Scanner<F>
where
    F: FnMut(f64, Option<&[f64]>) -> Result<LowLevels>,
{
    fn compute(&mut self, lambda: f64) -> Result<()> {
        let nearest = [&self.best, &self.last]
            .into_iter()
            .flatten()
            .min_by(|a, b| (a.0 - lambda).abs().total_cmp(&(b.0 - lambda).abs()));
        let start = nearest.map(|(_, lv)| {
            // A small random admixture keeps the start generic.
            let mut s = lv.warm_start();
            let nrm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            let eps = 1e-3 * nrm / (s.len() as f64).sqrt();
            for x in s.iter_mut() {
                *x += eps * (self.rng.random::<f64>() - 0.5);
            }
            s
        });
        let lv = (self.solve)(lambda, start.as_deref())?;
        self.matvecs += lv.matvecs;
        self.tol_used = self.tol_used.max(lv.tol);
        self.points.push((lambda, lv.e0, lv.e1));
        if self.best.as_ref().is_none_or(|(_, b)| lv.gap() < b.gap()) {
            self.best = Some((lambda, lv.clone()));
        }
        self.last = Some((lambda, lv));
        Ok(())
    }

    fn sorted(&mut self) {
        self.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.points.dedup_by(|a, b| a.0 == b.0);
    }
}

/// Gap profile of one instance over λ ∈ [0, 1]: coarse scan, then refinement
/// around the minimum until the critical region is resolved.
pub fn scan_gap(problem: &Problem, policy: &ScanPolicy) -> Result<GapProfile> {
    let family = QacFamily::new(problem)?;
    scan_family(&family, policy)
}

pub fn scan_family(family: &QacFamily, policy: &ScanPolicy) -> Result<GapProfile> {
    let opts = policy.lanczos();
    scan_with(policy, |lambda, start| low_levels(family, lambda, &opts, start))
}

/// Scan driven by an arbitrary two-level solver.
pub fn scan_with<F>(policy: &ScanPolicy, solve: F) -> Result<GapProfile>
where
    F: FnMut(f64, Option<&[f64]>) -> Result<LowLevels>,
{
    let mut sc = Scanner {
        solve,
        rng: ChaCha8Rng::seed_from_u64(policy.seed ^ 0xa5a5),
        points: Vec::new(),
        best: None,
        last: None,
        matvecs: 0,
        tol_used: policy.tol,
    };
    let n0 = policy.coarse_intervals.max(2);
    for k in 0..=n0 {
        sc.compute(k as f64 / n0 as f64)?;
    }
    sc.sorted();

    let mut h = 1.0 / n0 as f64;
    let mut passes = 0;
    let mut anomalies = Vec::new();
    let critical_points = loop {
        let lambdas: Vec<f64> = sc.points.iter().map(|p| p.0).collect();
        let gaps: Vec<f64> = sc.points.iter().map(|p| p.2 - p.1).collect();
        let (g, lc, s) = local_lz_estimate(&lambdas, &gaps);
        let half = 0.5 * policy.critical_r * g / s;
        let (wlo, whi) = ((lc - half).max(0.0), (lc + half).min(1.0));
        let inside = lambdas.iter().filter(|&&l| l >= wlo && l <= whi).count();
        if inside >= policy.min_critical_points {
            break inside;
        }
        if passes >= policy.max_passes {
            anomalies.push(format!(
                "critical region holds {inside} points after {passes} refinement passes"
            ));
            break inside;
        }
        let imin = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
        let lmin = lambdas[imin];
        let lo = wlo.min(lmin - h).max(0.0);
        let hi = whi.max(lmin + h).min(1.0);
        h /= policy.refine_factor.max(2) as f64;
        let k_lo = (lo / h).ceil() as i64;
        let k_hi = (hi / h).floor() as i64;
        let mut fresh: Vec<f64> = (k_lo..=k_hi)
            .map(|k| k as f64 * h)
            .filter(|l| !lambdas.iter().any(|x| x == l))
            .collect();
        // Walk outward from the minimum so warm starts stay close.
        fresh.sort_by(|a, b| (a - lmin).abs().total_cmp(&(b - lmin).abs()));
        for l in fresh {
            sc.compute(l)?;
        }
        sc.sorted();
        passes += 1;
    };

    let lambdas = sc.points.iter().map(|p| p.0).collect();
    let e0 = sc.points.iter().map(|p| p.1).collect();
    let e1 = sc.points.iter().map(|p| p.2).collect();
    let mut profile = GapProfile::from_points(lambdas, e0, e1, sc.tol_used);
    profile.refine_passes = passes;
    profile.critical_points = critical_points;
    profile.matvecs = sc.matvecs;
    if profile.local_minima > 1 {
        anomalies.push(format!("{} local minima of the gap", profile.local_minima));
    }
    if profile.gaps.iter().any(|&g| g <= 0.0) {
        anomalies.push("non-positive gap on the profile".into());
    }
    profile.anomalies = anomalies;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_minima_ignore_noise() {
        assert_eq!(count_local_minima(&[3.0, 2.0, 1.0, 2.0, 3.0], 1e-9), 1);
        assert_eq!(count_local_minima(&[3.0, 1.0, 3.0, 1.0, 3.0], 1e-9), 2);
        assert_eq!(count_local_minima(&[1.0, 1.0 - 1e-12, 1.0], 1e-9), 0);
    }

    #[test]
    fn refinement_resolves_synthetic_crossing() {
        let (g, lc, s) = (1e-3, 0.7, 3.0);
        let policy = ScanPolicy::default();
        let prof = scan_with(&policy, |l, _| {
            let gap = (g * g + (s * (l - lc)).powi(2)).sqrt();
            Ok(LowLevels {
                e0: -0.5 * gap,
                e1: 0.5 * gap,
                psi0: vec![1.0, 0.0],
                psi1: vec![0.0, 1.0],
                tol: 1e-10,
                matvecs: 1,
            })
        })
        .unwrap();
        let half = 0.5 * policy.critical_r * g / s;
        let inside = prof.lambdas.iter().filter(|&&x| (x - lc).abs() <= half).count();
        assert!(inside >= policy.min_critical_points, "{inside}");
        assert_eq!(prof.local_minima, 1);
        assert!(!prof.is_flagged());
        assert!(prof.lambdas.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn estimate_from_exact_crossing() {
        let (g, lc, s) = (0.02, 0.613, 4.0);
        let lambdas: Vec<f64> = (0..=128).map(|k| k as f64 / 128.0).collect();
        let gaps: Vec<f64> = lambdas.iter().map(|l: &f64| (g * g + (s * (l - lc)).powi(2)).sqrt()).collect();
        let (ge, le, se) = local_lz_estimate(&lambdas, &gaps);
        assert!((ge - g).abs() / g < 1e-6, "{ge}");
        assert!((le - lc).abs() < 1e-8);
        assert!((se - s).abs() / s < 1e-6);
    }
}
