//! 2SAT instances and their classical Ising energy.
//!
//! A literal maps to an Ising spin with `s = +1` meaning the variable is true.
//! A clause costs one unit of energy exactly when both of its literals are
//! false, so the energy of a configuration is the number of violated
//! clauses. Configurations are packed into a `u64` with bit `i` set when
//! spin `i` is up.

mod dos;
mod format;
mod implication;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dos::{energy_table, enumerate_dos, enumerate_dos_capped, DosVector, DEFAULT_ENUMERATION_CAP};
pub use format::ProblemFile;
pub use implication::implication_satisfiable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: u32,
    positive: bool,
}

impl Literal {
    /// `var` is zero-based; `positive == false` marks a negated literal.
    pub fn new(var: usize, positive: bool) -> Self {
        Literal {
            var: var as u32,
            positive,
        }
    }

    pub fn var(self) -> usize {
        self.var as usize
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    /// The matrix element ε: `+1` for a plain variable, `-1` for its negation.
    pub fn sign(self) -> i8 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn negate(self) -> Self {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }

    #[inline]
    pub fn is_true(self, bits: u64) -> bool {
        ((bits >> self.var) & 1 == 1) == self.positive
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub a: Literal,
    pub b: Literal,
}

impl Clause {
    pub fn new(a: Literal, b: Literal) -> Self {
        Clause { a, b }
    }

    #[inline]
    pub fn violated(&self, bits: u64) -> bool {
        !self.a.is_true(bits) && !self.b.is_true(bits)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a.var == self.b.var
    }

    pub fn involves(&self, var: usize) -> bool {
        self.a.var() == var || self.b.var() == var
    }
}

/// Which variable pairs a random clause may draw.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseModel {
    /// Unordered pair of distinct variables.
    #[default]
    DistinctPair,
    /// Both variables drawn independently, so `(x ∨ x)` and `(x ∨ ¬x)` occur.
    AnyPair,
}

/// A 2SAT instance with `n_vars` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ProblemFile", into = "ProblemFile")]
pub struct Problem {
    n_vars: usize,
    clauses: Vec<Clause>,
}

impl Problem {
    pub fn new(n_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::Structural("problem needs at least one variable".into()));
        }
        for (j, c) in clauses.iter().enumerate() {
            for lit in [c.a, c.b] {
                if lit.var() >= n_vars {
                    return Err(Error::Structural(format!(
                        "clause {j} references variable {} but n = {n_vars}",
                        lit.var() + 1
                    )));
                }
            }
        }
        Ok(Problem { n_vars, clauses })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause-to-variable ratio M/N.
    pub fn alpha(&self) -> f64 {
        self.clauses.len() as f64 / self.n_vars as f64
    }

    pub fn has_degenerate_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_degenerate)
    }

    /// Swaps clause `idx` for `clause`, returning the one that was there.
    pub fn replace_clause(&mut self, idx: usize, clause: Clause) -> Result<Clause> {
        for lit in [clause.a, clause.b] {
            if lit.var() >= self.n_vars {
                return Err(Error::Structural(format!(
                    "replacement clause references variable {}",
                    lit.var() + 1
                )));
            }
        }
        let slot = self
            .clauses
            .get_mut(idx)
            .ok_or_else(|| Error::Structural(format!("clause index {idx} out of range")))?;
        Ok(std::mem::replace(slot, clause))
    }

    /// Energy of a packed configuration. Requires `n_vars <= 64`.
    #[inline]
    pub fn energy_bits(&self, bits: u64) -> usize {
        self.clauses.iter().filter(|c| c.violated(bits)).count()
    }

    pub(crate) fn check_packable(&self) -> Result<()> {
        if self.n_vars > 64 {
            return Err(Error::Capacity {
                n: self.n_vars,
                cap: 64,
            });
        }
        Ok(())
    }
}

/// Ising spins `s_i = ±1`, one per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Structural(format!("spin value {bad} is not ±1")));
        }
        Ok(SpinConfig { spins })
    }

    pub fn from_bits(bits: u64, n: usize) -> Self {
        assert!(n <= 64, "packed configurations hold at most 64 spins");
        let spins = (0..n)
            .map(|i| if (bits >> i) & 1 == 1 { 1 } else { -1 })
            .collect();
        SpinConfig { spins }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let spins = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        SpinConfig { spins }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, i: usize) -> Option<i8> {
        self.spins.get(i).copied()
    }

    pub fn flip(&mut self, i: usize) {
        self.spins[i] = -self.spins[i];
    }

    /// Boolean assignment under `s = +1 ⇔ x = true`.
    pub fn assignment(&self) -> Vec<bool> {
        self.spins.iter().map(|&s| s == 1).collect()
    }

    pub fn to_bits(&self) -> Option<u64> {
        if self.spins.len() > 64 {
            return None;
        }
        Some(
            self.spins
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == 1)
                .fold(0u64, |acc, (i, _)| acc | (1 << i)),
        )
    }
}

fn signed_spin(lit: Literal, config: &SpinConfig) -> Result<i32> {
    let s = config.spin(lit.var()).ok_or_else(|| {
        Error::Structural(format!(
            "literal on variable {} but configuration has {} spins",
            lit.var() + 1,
            config.len()
        ))
    })?;
    Ok(lit.sign() as i32 * s as i32)
}

/// `h(s_l, s_m) = (s_l - 1)/2 · (s_m - 1)/2` on the sign-adjusted spins.
pub fn clause_energy(clause: &Clause, config: &SpinConfig) -> Result<u32> {
    let sa = signed_spin(clause.a, config)?;
    let sb = signed_spin(clause.b, config)?;
    Ok((((sa - 1) / 2) * ((sb - 1) / 2)) as u32)
}

pub fn problem_energy(problem: &Problem, config: &SpinConfig) -> Result<usize> {
    if config.len() != problem.n_vars() {
        return Err(Error::Structural(format!(
            "configuration has {} spins, problem has {} variables",
            config.len(),
            problem.n_vars()
        )));
    }
    problem
        .clauses()
        .iter()
        .map(|c| clause_energy(c, config).map(|e| e as usize))
        .sum()
}

pub fn random_clause<R: Rng + ?Sized>(n: usize, model: ClauseModel, rng: &mut R) -> Clause {
    let a = rng.random_range(0..n);
    let b = match model {
        ClauseModel::DistinctPair => {
            let b = rng.random_range(0..n - 1);
            if b >= a {
                b + 1
            } else {
                b
            }
        }
        ClauseModel::AnyPair => rng.random_range(0..n),
    };
    Clause::new(
        Literal::new(a, rng.random::<bool>()),
        Literal::new(b, rng.random::<bool>()),
    )
}

/// `m` independent clauses over distinct variable pairs with uniform signs.
pub fn random_problem<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Problem> {
    random_problem_with(n, m, ClauseModel::DistinctPair, rng)
}

pub fn random_problem_with<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    model: ClauseModel,
    rng: &mut R,
) -> Result<Problem> {
    if n < 2 {
        return Err(Error::Argument(format!("random problems need n >= 2, got {n}")));
    }
    let clauses = (0..m).map(|_| random_clause(n, model, rng)).collect();
    Problem::new(n, clauses)
}

/// Per-variable clause lists for incremental energy updates.
#[derive(Clone, Debug)]
pub struct Incidence {
    offsets: Vec<usize>,
    clauses: Vec<Clause>,
}

impl Incidence {
    pub fn new(problem: &Problem) -> Self {
        let n = problem.n_vars();
        let mut lists: Vec<Vec<Clause>> = vec![Vec::new(); n];
        for c in problem.clauses() {
            lists[c.a.var()].push(*c);
            if !c.is_degenerate() {
                lists[c.b.var()].push(*c);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut clauses = Vec::new();
        for list in lists {
            clauses.extend(list);
            offsets.push(clauses.len());
        }
        Incidence { offsets, clauses }
    }

    pub fn clauses_of(&self, var: usize) -> &[Clause] {
        &self.clauses[self.offsets[var]..self.offsets[var + 1]]
    }

    pub fn max_degree(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Energy change from flipping `var` in `bits`.
    #[inline]
    pub fn flip_delta(&self, bits: u64, var: usize) -> i32 {
        let flipped = bits ^ (1 << var);
        self.clauses_of(var)
            .iter()
            .map(|c| c.violated(flipped) as i32 - c.violated(bits) as i32)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lit(v: usize, s: i8) -> Literal {
        Literal::new(v - 1, s > 0)
    }

    fn spins(s: &[i8]) -> SpinConfig {
        SpinConfig::new(s.to_vec()).unwrap()
    }

    #[test]
    fn clause_energy_examples() {
        let c = Clause::new(lit(1, 1), lit(2, 1));
        assert_eq!(clause_energy(&c, &spins(&[1, 1])).unwrap(), 0);
        assert_eq!(clause_energy(&c, &spins(&[-1, -1])).unwrap(), 1);
        let c = Clause::new(lit(1, -1), lit(2, 1));
        assert_eq!(clause_energy(&c, &spins(&[-1, -1])).unwrap(), 0);
    }

    #[test]
    fn clause_energy_rejects_short_config() {
        let c = Clause::new(lit(1, 1), lit(3, 1));
        assert!(matches!(
            clause_energy(&c, &spins(&[1, 1])),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn problem_energy_examples() {
        let empty = Problem::new(3, vec![]).unwrap();
        assert_eq!(problem_energy(&empty, &spins(&[1, -1, 1])).unwrap(), 0);

        let p = Problem::new(
            2,
            vec![
                Clause::new(lit(1, 1), lit(2, 1)),
                Clause::new(lit(1, -1), lit(2, -1)),
            ],
        )
        .unwrap();
        assert_eq!(problem_energy(&p, &spins(&[1, -1])).unwrap(), 0);
        assert_eq!(problem_energy(&p, &spins(&[1, 1])).unwrap(), 1);
    }

    #[test]
    fn problem_rejects_out_of_range_variable() {
        let err = Problem::new(2, vec![Clause::new(lit(1, 1), lit(3, 1))]);
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn random_problem_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = random_problem(2, 1, &mut rng).unwrap();
            let c = p.clauses()[0];
            let mut vars = [c.a.var(), c.b.var()];
            vars.sort();
            assert_eq!(vars, [0, 1]);
        }
        assert!(matches!(random_problem(1, 3, &mut rng), Err(Error::Argument(_))));
    }

    #[test]
    fn random_problem_has_no_degenerate_clauses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            assert!(!random_problem(10, 11, &mut rng).unwrap().has_degenerate_clause());
        }
    }

    #[test]
    fn random_signs_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut positive = 0u64;
        let mut total = 0u64;
        for _ in 0..draws / 11 + 1 {
            let p = random_problem(10, 11, &mut rng).unwrap();
            for c in p.clauses() {
                positive += c.a.is_positive() as u64 + c.b.is_positive() as u64;
                total += 2;
            }
        }
        let mean = 0.5 * total as f64;
        let sigma = (total as f64 * 0.25).sqrt();
        assert!((positive as f64 - mean).abs() < 4.0 * sigma);
    }

    #[test]
    fn any_pair_model_produces_degenerate_clauses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_problem_with(3, 200, ClauseModel::AnyPair, &mut rng).unwrap();
        assert!(p.has_degenerate_clause());
    }

    #[test]
    fn flip_delta_matches_full_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_problem(9, 10, &mut rng).unwrap();
        let inc = Incidence::new(&p);
        for bits in 0..(1u64 << 9) {
            for v in 0..9 {
                let expect = p.energy_bits(bits ^ (1 << v)) as i32 - p.energy_bits(bits) as i32;
                assert_eq!(inc.flip_delta(bits, v), expect);
            }
        }
    }

    #[test]
    fn spin_config_bits_roundtrip() {
        let c = SpinConfig::from_bits(0b1011, 5);
        assert_eq!(c.spins(), &[1, 1, -1, 1, -1]);
        assert_eq!(c.to_bits(), Some(0b1011));
        assert_eq!(c.assignment(), vec![true, true, false, true, false]);
    }
}
