use crate::error::{Error, Result};
use crate::sat::{energy_table, Problem};

/// Maximum spin count for which the interpolated Hamiltonian is handled.
pub const SPECTRUM_CAP: usize = 20;

/// A real symmetric linear operator applied matrix-free.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Classical energies of one instance over the computational basis, reused
/// across every λ of a scan.
#[derive(Clone, Debug)]
pub struct QacFamily {
    n: usize,
    energies: Vec<f64>,
}

impl QacFamily {
    pub fn new(problem: &Problem) -> Result<Self> {
        let n = problem.n_vars();
        if n > SPECTRUM_CAP {
            return Err(Error::Capacity { n, cap: SPECTRUM_CAP });
        }
        let energies = energy_table(problem, SPECTRUM_CAP)?.into_iter().map(f64::from).collect();
        Ok(QacFamily { n, energies })
    }

    pub fn from_energies(n: usize, energies: Vec<f64>) -> Result<Self> {
        if energies.len() != 1usize << n {
            return Err(Error::Structural(format!(
                "energy table of length {} does not match 2^{n}",
                energies.len()
            )));
        }
        Ok(QacFamily { n, energies })
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn at(&self, lambda: f64) -> Result<Hqac<'_>> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Argument(format!("lambda {lambda} outside [0, 1]")));
        }
        Ok(Hqac { family: self, lambda })
    }
}

/// `H(λ) = (1−λ) Σ σˣ_i + λ H_2SAT` on 2^N amplitudes indexed by packed spins.
#[derive(Clone, Copy, Debug)]
pub struct Hqac<'a> {
    family: &'a QacFamily,
    lambda: f64,
}

impl Hqac<'_> {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl SymmetricOperator for Hqac<'_> {
    fn dim(&self) -> usize {
        self.family.energies.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let lam = self.lambda;
        let t = 1.0 - lam;
        for ((yi, xi), e) in y.iter_mut().zip(x).zip(&self.family.energies) {
            *yi = lam * e * xi;
        }
        if t == 0.0 {
            return;
        }
        for bit in 0..self.family.n {
            let s = 1usize << bit;
            for (yb, xb) in y.chunks_exact_mut(2 * s).zip(x.chunks_exact(2 * s)) {
                let (ylo, yhi) = yb.split_at_mut(s);
                let (xlo, xhi) = xb.split_at(s);
                for j in 0..s {
                    ylo[j] += t * xhi[j];
                    yhi[j] += t * xlo[j];
                }
            }
        }
    }
}

/// One application of the interpolated Hamiltonian to `v`.
pub fn apply_hqac(problem: &Problem, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    let n = problem.n_vars();
    if n > SPECTRUM_CAP || v.len() != 1usize << n {
        return Err(Error::Structural(format!(
            "state of length {} does not match 2^{n}",
            v.len()
        )));
    }
    let family = QacFamily::new(problem)?;
    let h = family.at(lambda)?;
    let mut out = vec![0.0; v.len()];
    h.apply(v, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::random_problem;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn dense(problem: &Problem, lambda: f64) -> DMatrix<f64> {
        let n = problem.n_vars();
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            m[(x, x)] = lambda * problem.energy_bits(x as u64) as f64;
            for i in 0..n {
                m[(x ^ (1 << i), x)] += 1.0 - lambda;
            }
        }
        m
    }

    #[test]
    fn classical_limit_is_diagonal() {
        let p = Problem::from_json(r#"{"n":2,"clauses":[[1,1,2,1],[1,1,2,-1],[1,-1,2,1]]}"#).unwrap();
        // unique ground state x1 = x2 = true, i.e. bits 0b11
        let mut v = vec![0.0; 4];
        v[3] = 1.0;
        assert_eq!(apply_hqac(&p, 1.0, &v).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn driver_ground_state() {
        let p = random_problem(5, 6, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let v: Vec<f64> = (0..32u32).map(|x| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let hv = apply_hqac(&p, 0.0, &v).unwrap();
        for (a, b) in hv.iter().zip(&v) {
            assert!((a + 5.0 * b).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_problem(6, 7, &mut rng).unwrap();
        let v: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
        let got = apply_hqac(&p, 0.5, &v).unwrap();
        let want = dense(&p, 0.5) * nalgebra::DVector::from_vec(v);
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_in_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_problem(7, 8, &mut rng).unwrap();
        let fam = QacFamily::new(&p).unwrap();
        for _ in 0..10 {
            let h = fam.at(rng.random::<f64>()).unwrap();
            let u: Vec<f64> = (0..128).map(|_| rng.random::<f64>() - 0.5).collect();
            let v: Vec<f64> = (0..128).map(|_| rng.random::<f64>() - 0.5).collect();
            let mut hu = vec![0.0; 128];
            let mut hv = vec![0.0; 128];
            h.apply(&u, &mut hu);
            h.apply(&v, &mut hv);
            let a: f64 = u.iter().zip(&hv).map(|(x, y)| x * y).sum();
            let b: f64 = hu.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        let p = random_problem(3, 4, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(matches!(apply_hqac(&p, 0.3, &[0.0; 4]), Err(Error::Structural(_))));
    }
}
