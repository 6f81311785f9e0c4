use hardsat_core::sat::{
    enumerate_dos, implication_satisfiable, problem_energy, random_problem, random_problem_with, Clause, ClauseModel,
    Literal, Problem, SpinConfig,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn relabel(p: &Problem, perm: &[usize], order: &[usize]) -> Problem {
    let map = |l: Literal| Literal::new(perm[l.var()], l.is_positive());
    let clauses = order.iter().map(|&j| {
        let c = p.clauses()[j];
        Clause::new(map(c.a), map(c.b))
    });
    Problem::new(p.n_vars(), clauses.collect()).unwrap()
}

fn gauge(p: &Problem, var: usize) -> Problem {
    let flip = |l: Literal| if l.var() == var { l.negate() } else { l };
    let clauses = p.clauses().iter().map(|c| Clause::new(flip(c.a), flip(c.b)));
    Problem::new(p.n_vars(), clauses.collect()).unwrap()
}

fn truth_table(p: &Problem) -> Vec<u64> {
    let mut counts = vec![0u64; p.num_clauses() + 1];
    for bits in 0..1u64 << p.n_vars() {
        let e = p.clauses().iter().filter(|c| !c.a.is_true(bits) && !c.b.is_true(bits)).count();
        counts[e] += 1;
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn energy_invariant_under_relabeling(seed in any::<u64>(), n in 2usize..12, extra in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(n, n + extra, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut order: Vec<usize> = (0..p.num_clauses()).collect();
        order.shuffle(&mut rng);
        let q = relabel(&p, &perm, &order);
        let s = SpinConfig::random(n, &mut rng);
        let mut t = vec![0i8; n];
        for i in 0..n {
            t[perm[i]] = s.spins()[i];
        }
        let t = SpinConfig::new(t).unwrap();
        prop_assert_eq!(problem_energy(&p, &s).unwrap(), problem_energy(&q, &t).unwrap());
        prop_assert_eq!(enumerate_dos(&p).unwrap(), enumerate_dos(&q).unwrap());
    }

    #[test]
    fn energy_invariant_under_gauge(seed in any::<u64>(), n in 2usize..12, var in 0usize..12) {
        let var = var % n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem_with(n, n + 1, ClauseModel::AnyPair, &mut rng).unwrap();
        let q = gauge(&p, var);
        let s = SpinConfig::random(n, &mut rng);
        let mut t = s.clone();
        t.flip(var);
        prop_assert_eq!(problem_energy(&p, &s).unwrap(), problem_energy(&q, &t).unwrap());
    }

    #[test]
    fn energy_is_bounded_by_clause_count(seed in any::<u64>(), n in 2usize..16, m in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(n, m, &mut rng).unwrap();
        let e = problem_energy(&p, &SpinConfig::random(n, &mut rng)).unwrap();
        prop_assert!(e <= m);
    }

    #[test]
    fn dos_counts_every_configuration(seed in any::<u64>(), n in 2usize..13, m in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = enumerate_dos(&random_problem(n, m, &mut rng).unwrap()).unwrap();
        prop_assert_eq!(d.total(), 1u64 << n);
    }

    #[test]
    fn satisfiability_matches_ground_count(seed in any::<u64>(), n in 2usize..13, extra in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem_with(n, n + extra, ClauseModel::AnyPair, &mut rng).unwrap();
        let (sat, witness) = implication_satisfiable(&p);
        prop_assert_eq!(sat, enumerate_dos(&p).unwrap().omega(0) > 0);
        if let Some(w) = witness {
            prop_assert_eq!(problem_energy(&p, &w).unwrap(), 0);
        }
    }
}

#[test]
fn dos_matches_truth_table_on_many_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..500 {
        let n = 2 + k % 9;
        let p = random_problem(n, n + 1 + k % 3, &mut rng).unwrap();
        let d = enumerate_dos(&p).unwrap();
        let table = truth_table(&p);
        for (e, &c) in table.iter().enumerate() {
            assert_eq!(d.omega(e), c, "instance {k}, energy {e}");
        }
        assert_eq!(implication_satisfiable(&p).0, d.omega(0) > 0);
    }
}
