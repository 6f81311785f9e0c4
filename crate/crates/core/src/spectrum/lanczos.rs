//! Thick-restart Lanczos with full reorthogonalization and locking of
//! converged Ritz pairs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hamiltonian::{QacFamily, SymmetricOperator};
use crate::error::{Error, Result};
use crate::sat::Problem;

/// Default absolute residual tolerance for eigenpairs.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub tol: f64,
    /// Largest Krylov basis before a thick restart.
    pub max_basis: usize,
    /// Ritz vectors retained across a restart.
    pub keep: usize,
    pub max_matvecs: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: DEFAULT_TOL,
            max_basis: 40,
            keep: 12,
            max_matvecs: 20_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

const PAR_MIN: usize = 1 << 14;
const RITZ_STRIDE: usize = 4;

/// Serial dot product with independent lanes so that it vectorizes.
fn dot_serial(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(p, q)| p * q).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Long vectors are reduced over fixed chunks in a fixed order, so the result
/// is the same for any thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < PAR_MIN {
        return dot_serial(a, b);
    }
    let partial: Vec<f64> = if rayon::current_num_threads() > 1 {
        a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| dot_serial(x, y)).collect()
    } else {
        a.chunks(4096).zip(b.chunks(4096)).map(|(x, y)| dot_serial(x, y)).collect()
    };
    partial.iter().sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() >= PAR_MIN && rayon::current_num_threads() > 1 {
        y.par_chunks_mut(4096).zip(x.par_chunks(4096)).for_each(|(yc, xc)| {
            yc.iter_mut().zip(xc).for_each(|(a, b)| *a += alpha * b);
        });
    } else {
        y.iter_mut().zip(x).for_each(|(a, b)| *a += alpha * b);
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn scale(x: &mut [f64], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Extra Gram-Schmidt passes while the norm of `r` drops below `1/√2` of
/// its value before the previous pass.
fn refine_orthogonality<'a>(r: &mut [f64], mut before: f64, against: impl Iterator<Item = &'a Vec<f64>> + Clone) {
    for _ in 0..3 {
        let after = norm(r);
        if after > std::f64::consts::FRAC_1_SQRT_2 * before {
            return;
        }
        before = after;
        let coeffs: Vec<f64> = against.clone().map(|v| dot(v, r)).collect();
        for (v, c) in against.clone().zip(coeffs) {
            axpy(-c, v, r);
        }
    }
}

/// Two passes of classical Gram-Schmidt against `against`.
fn orthogonalize<'a>(r: &mut [f64], against: impl Iterator<Item = &'a Vec<f64>> + Clone) {
    for _ in 0..2 {
        for v in against.clone() {
            let c = dot(v, r);
            axpy(-c, v, r);
        }
    }
}

/// Columns `0..p` of `vectors · coeffs`, accumulated in row blocks.
fn combine(vectors: &[Vec<f64>], coeffs: &DMatrix<f64>, p: usize, dim: usize) -> Vec<Vec<f64>> {
    const BLOCK: usize = 512;
    let mut out = vec![vec![0.0; dim]; p];
    for start in (0..dim).step_by(BLOCK) {
        let end = (start + BLOCK).min(dim);
        for (i, o) in out.iter_mut().enumerate() {
            let o = &mut o[start..end];
            for (j, v) in vectors.iter().enumerate() {
                let c = coeffs[(j, i)];
                if c != 0.0 {
                    o.iter_mut().zip(&v[start..end]).for_each(|(a, b)| *a += c * b);
                }
            }
        }
    }
    out
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    v
}

/// Eigen-decomposition of the projected matrix, ascending.
fn ritz(g: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let k = g.len();
    let m = DMatrix::from_fn(k, k, |i, j| 0.5 * (g[i][j] + g[j][i]));
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// The `nev` lowest eigenpairs of `op`, each with residual `‖Hy − θy‖ ≤ tol`.
pub fn lowest_eigenpairs<O: SymmetricOperator>(
    op: &O,
    nev: usize,
    opts: &LanczosOptions,
    start: Option<&[f64]>,
) -> Result<Eigenpairs> {
    let dim = op.dim();
    if nev == 0 || nev > dim {
        return Err(Error::Argument(format!("cannot extract {nev} eigenpairs of a {dim}-dimensional operator")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_res: Vec<f64> = Vec::new();

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut hbasis: Vec<Vec<f64>> = Vec::new();
    let mut g: Vec<Vec<f64>> = Vec::new();
    let mut matvecs = 0usize;
    let mut last_res = vec![f64::INFINITY; nev];

    let mut v0 = match start {
        Some(s) if s.len() == dim && norm(s) > 0.0 => s.to_vec(),
        Some(s) if s.len() != dim => {
            return Err(Error::Structural(format!("start vector of length {} for dimension {dim}", s.len())))
        }
        _ => random_unit(dim, &mut rng),
    };
    let n0 = norm(&v0);
    scale(&mut v0, 1.0 / n0);
    basis.push(v0);

    loop {
        let cap = opts.max_basis.clamp(nev + 2, usize::MAX).min(dim - locked.len());
        // Expand until the basis is full, a pair converges, or the space is invariant.
        let mut breakdown = false;
        let mut beta = 0.0;
        let mut spread = 1.0f64;
        let (theta, s) = loop {
            let j = hbasis.len();
            let mut w = vec![0.0; dim];
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            for row in g.iter_mut() {
                row.push(0.0);
            }
            g.push(vec![0.0; j + 1]);
            let mut r = w.clone();
            let w_norm = norm(&w);
            for i in 0..=j {
                let c = dot(&basis[i], &w);
                g[i][j] = c;
                g[j][i] = c;
                axpy(-c, &basis[i], &mut r);
            }
            for v in &locked {
                let c = dot(v, &r);
                axpy(-c, v, &mut r);
            }
            refine_orthogonality(&mut r, w_norm, locked.iter().chain(basis.iter()));
            hbasis.push(w);
            let b = norm(&r);
            spread = spread.max(w_norm);
            if b <= 1e-12 * spread {
                breakdown = true;
                break ritz(&g);
            }
            scale(&mut r, 1.0 / b);
            basis.push(r);
            beta = b;
            let k = hbasis.len();
            let need = nev - locked.len();
            let full = k >= cap || matvecs >= opts.max_matvecs;
            // The projected eigenproblem is only solved every few steps.
            if full || (k >= need && (k - need) % RITZ_STRIDE == 0) {
                let (theta, s) = ritz(&g);
                if full || beta * s[(k - 1, 0)].abs() <= opts.tol {
                    break (theta, s);
                }
            }
        };

        let k = hbasis.len();
        let need = nev - locked.len();
        let est = |i: usize| if breakdown { 0.0 } else { beta * s[(k - 1, i)].abs() };
        for (i, slot) in last_res.iter_mut().skip(locked.len()).enumerate() {
            if i < k {
                *slot = est(i);
            }
        }

        let mut n_conv = 0;
        while n_conv < need.min(k) && est(n_conv) <= opts.tol {
            n_conv += 1;
        }
        let p = if breakdown { k } else { (opts.keep.max(need + 1) + n_conv).min(k).min(cap.saturating_sub(1).max(1)) };
        let p = p.max(n_conv);

        let mut new_basis = Vec::with_capacity(p + 1);
        let mut new_h = Vec::with_capacity(p + 1);
        let mut new_theta = Vec::with_capacity(p);
        let ys = combine(&basis[..k], &s, p, dim);
        let hys = combine(&hbasis, &s, p, dim);
        for (i, (y, hy)) in ys.into_iter().zip(hys).enumerate() {
            if i < n_conv {
                let mut res = hy.clone();
                axpy(-theta[i], &y, &mut res);
                let true_res = norm(&res);
                if true_res <= opts.tol && locked.len() < nev && new_basis.is_empty() {
                    locked.push(y);
                    locked_vals.push(theta[i]);
                    locked_res.push(true_res);
                    continue;
                }
            }
            new_basis.push(y);
            new_h.push(hy);
            new_theta.push(theta[i]);
        }
        if locked.len() >= nev {
            let mut order: Vec<usize> = (0..nev).collect();
            order.sort_by(|&a, &b| locked_vals[a].total_cmp(&locked_vals[b]));
            return Ok(Eigenpairs {
                values: order.iter().map(|&i| locked_vals[i]).collect(),
                vectors: order.iter().map(|&i| locked[i].clone()).collect(),
                residuals: order.iter().map(|&i| locked_res[i]).collect(),
                matvecs,
            });
        }
        if matvecs >= opts.max_matvecs {
            let mut residuals = locked_res.clone();
            residuals.extend(last_res.iter().skip(locked.len()).copied());
            return Err(Error::Solver { iterations: matvecs, residuals });
        }

        let next = if breakdown {
            let mut r = random_unit(dim, &mut rng);
            orthogonalize(&mut r, locked.iter().chain(new_basis.iter()));
            let nr = norm(&r);
            if nr < 1e-8 {
                return Err(Error::Solver { iterations: matvecs, residuals: last_res.clone() });
            }
            scale(&mut r, 1.0 / nr);
            r
        } else {
            basis.pop().expect("residual direction present")
        };
        let q = new_basis.len();
        g = (0..q)
            .map(|i| {
                let mut row = vec![0.0; q];
                row[i] = new_theta[i];
                row
            })
            .collect();
        new_basis.push(next);
        basis = new_basis;
        hbasis = new_h;
    }
}

/// Lowest two levels of `H(λ)` with their eigenvectors.
#[derive(Clone, Debug)]
pub struct LowLevels {
    pub e0: f64,
    pub e1: f64,
    pub psi0: Vec<f64>,
    pub psi1: Vec<f64>,
    pub tol: f64,
    pub matvecs: usize,
}

impl LowLevels {
    pub fn gap(&self) -> f64 {
        self.e1 - self.e0
    }

    /// Start vector for a neighbouring λ.
    pub fn warm_start(&self) -> Vec<f64> {
        self.psi0.iter().zip(&self.psi1).map(|(a, b)| a + b).collect()
    }
}

/// Two lowest levels at one λ, tightening the tolerance 100× when the levels
/// come within 10·tol of each other.
pub fn low_levels(family: &QacFamily, lambda: f64, opts: &LanczosOptions, start: Option<&[f64]>) -> Result<LowLevels> {
    let op = family.at(lambda)?;
    let mut o = opts.clone();
    let mut pairs = lowest_eigenpairs(&op, 2, &o, start)?;
    if pairs.values[1] - pairs.values[0] < 10.0 * o.tol {
        o.tol /= 100.0;
        let prev = pairs.matvecs;
        let warm: Vec<f64> = pairs.vectors[0].iter().zip(&pairs.vectors[1]).map(|(a, b)| a + b).collect();
        pairs = lowest_eigenpairs(&op, 2, &o, Some(&warm))?;
        pairs.matvecs += prev;
    }
    let mut vectors = pairs.vectors.into_iter();
    Ok(LowLevels {
        e0: pairs.values[0],
        e1: pairs.values[1],
        psi0: vectors.next().unwrap(),
        psi1: vectors.next().unwrap(),
        tol: o.tol,
        matvecs: pairs.matvecs,
    })
}

/// The two lowest eigenvalues of `H(λ)`.
pub fn lowest_two(problem: &Problem, lambda: f64, tol: f64) -> Result<(f64, f64)> {
    let family = QacFamily::new(problem)?;
    let opts = LanczosOptions { tol, ..LanczosOptions::default() };
    let levels = low_levels(&family, lambda, &opts, None)?;
    Ok((levels.e0, levels.e1))
}
