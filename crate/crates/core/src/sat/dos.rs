use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Incidence, Problem};
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Below this size a single Gray-code walk is faster than splitting.
const PARALLEL_MIN_VARS: usize = 20;
const PARALLEL_PREFIX_BITS: usize = 4;

/// Exact degeneracies `Ω(E)` for `E = 0..=M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DosVector {
    pub n_vars: usize,
    pub counts: Vec<u64>,
}

impl DosVector {
    pub fn omega(&self, energy: usize) -> u64 {
        self.counts.get(energy).copied().unwrap_or(0)
    }

    /// `Ω(E=0)`, the number of satisfying assignments.
    pub fn ground_degeneracy(&self) -> u64 {
        self.omega(0)
    }

    /// `Ω(E=1)`.
    pub fn omega1(&self) -> u64 {
        self.omega(1)
    }

    /// Entropy density at energy one, `ln Ω(E=1) / N`.
    pub fn s1(&self) -> f64 {
        (self.omega1() as f64).ln() / self.n_vars as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_energy(&self) -> usize {
        self.counts.len() - 1
    }
}

/// Walks Gray-code order over the configurations whose top `fixed_bits` high
/// bits equal `prefix`, counting energies.
fn walk_counts(problem: &Problem, inc: &Incidence, free_bits: usize, prefix: u64) -> Vec<u64> {
    let mut counts = vec![0u64; problem.num_clauses() + 1];
    let mut bits = prefix << free_bits;
    let mut energy = problem.energy_bits(bits) as i64;
    counts[energy as usize] += 1;
    for k in 1u64..(1u64 << free_bits) {
        let v = k.trailing_zeros() as usize;
        energy += inc.flip_delta(bits, v) as i64;
        bits ^= 1 << v;
        counts[energy as usize] += 1;
    }
    counts
}

pub fn enumerate_dos(problem: &Problem) -> Result<DosVector> {
    enumerate_dos_capped(problem, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_dos_capped(problem: &Problem, cap: usize) -> Result<DosVector> {
    let n = problem.n_vars();
    if n > cap || n > 63 {
        return Err(Error::Capacity { n, cap: cap.min(63) });
    }
    let inc = Incidence::new(problem);
    let counts = if n >= PARALLEL_MIN_VARS {
        let free = n - PARALLEL_PREFIX_BITS;
        (0..1u64 << PARALLEL_PREFIX_BITS)
            .into_par_iter()
            .map(|prefix| walk_counts(problem, &inc, free, prefix))
            .reduce(
                || vec![0u64; problem.num_clauses() + 1],
                |mut acc, part| {
                    acc.iter_mut().zip(part).for_each(|(a, p)| *a += p);
                    acc
                },
            )
    } else {
        walk_counts(problem, &inc, n, 0)
    };
    Ok(DosVector { n_vars: n, counts })
}

/// Classical energy of every basis state, indexed by packed configuration.
pub fn energy_table(problem: &Problem, cap: usize) -> Result<Vec<u16>> {
    let n = problem.n_vars();
    if n > cap || n > 32 {
        return Err(Error::Capacity { n, cap: cap.min(32) });
    }
    if problem.num_clauses() > u16::MAX as usize {
        return Err(Error::Structural("too many clauses for the energy table".into()));
    }
    let inc = Incidence::new(problem);
    let mut table = vec![0u16; 1 << n];
    let mut bits = 0u64;
    let mut energy = problem.energy_bits(0) as i64;
    table[0] = energy as u16;
    for k in 1u64..(1u64 << n) {
        let v = k.trailing_zeros() as usize;
        energy += inc.flip_delta(bits, v) as i64;
        bits ^= 1 << v;
        table[bits as usize] = energy as u16;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{random_problem, Clause, Literal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_problem_has_all_configs_at_zero() {
        let p = Problem::new(3, vec![]).unwrap();
        assert_eq!(enumerate_dos(&p).unwrap().counts, vec![8]);
    }

    #[test]
    fn duplicated_unit_clause() {
        let x1 = Literal::new(0, true);
        let p = Problem::new(1, vec![Clause::new(x1, x1), Clause::new(x1, x1)]).unwrap();
        let dos = enumerate_dos(&p).unwrap();
        assert_eq!(dos.counts, vec![1, 0, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_problem(12, 13, &mut rng).unwrap();
        assert!(matches!(
            enumerate_dos_capped(&p, 10),
            Err(Error::Capacity { n: 12, cap: 10 })
        ));
    }

    #[test]
    fn energy_table_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_problem(8, 9, &mut rng).unwrap();
        let table = energy_table(&p, 24).unwrap();
        for (bits, &e) in table.iter().enumerate() {
            assert_eq!(e as usize, p.energy_bits(bits as u64));
        }
    }

    #[test]
    fn split_walk_matches_single_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_problem(20, 21, &mut rng).unwrap();
        let inc = Incidence::new(&p);
        let single = walk_counts(&p, &inc, 20, 0);
        let split = enumerate_dos(&p).unwrap();
        assert_eq!(single, split.counts);
        assert_eq!(split.total(), 1 << 20);
    }
}
