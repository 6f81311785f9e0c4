//! Fixtures shared by the benchmarks.

use hardsat_core::sat::{enumerate_dos, random_problem, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A random instance with `n + 1` clauses and a unique satisfying assignment.
pub fn unique_instance(n: usize, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p = random_problem(n, n + 1, &mut rng).expect("valid size");
        if enumerate_dos(&p).expect("enumerable").ground_degeneracy() == 1 {
            return p;
        }
    }
}
