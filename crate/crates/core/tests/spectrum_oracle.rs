use hardsat_core::sat::{enumerate_dos, random_problem, Clause, Literal, Problem};
use hardsat_core::spectrum::{apply_hqac, fit_lz_with, lowest_two, LzFitOptions, scan_gap, ScanPolicy, DEFAULT_TOL};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense matrix built from clause truth tables and explicit bit flips.
fn dense(p: &Problem, lambda: f64) -> DMatrix<f64> {
    let n = p.n_vars();
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let e = p.clauses().iter().filter(|c| c.violated(x as u64)).count();
        h[(x, x)] = lambda * e as f64;
        for i in 0..n {
            h[(x, x ^ (1 << i))] = 1.0 - lambda;
        }
    }
    h
}

fn dense_lowest_two(p: &Problem, lambda: f64) -> (f64, f64) {
    let mut ev: Vec<f64> = SymmetricEigen::new(dense(p, lambda)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    (ev[0], ev[1])
}

fn unique_ground_state(n: usize, rng: &mut ChaCha8Rng) -> Problem {
    loop {
        let p = random_problem(n, n + 1, rng).unwrap();
        if enumerate_dos(&p).unwrap().omega(0) == 1 {
            return p;
        }
    }
}

#[test]
fn lowest_two_matches_dense_diagonalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..50 {
        let n = 2 + k % 7;
        let p = random_problem(n, n + 1, &mut rng).unwrap();
        let lambda: f64 = rng.random();
        let (e0, e1) = lowest_two(&p, lambda, DEFAULT_TOL).unwrap();
        let (d0, d1) = dense_lowest_two(&p, lambda);
        assert!((e0 - d0).abs() < 1e-9 && (e1 - d1).abs() < 1e-9, "n={n} λ={lambda}: ({e0}, {e1}) vs ({d0}, {d1})");
    }
}

#[test]
fn gap_endpoints_for_unique_ground_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 3..=8 {
        let p = unique_ground_state(n, &mut rng);
        let (a0, a1) = lowest_two(&p, 0.0, DEFAULT_TOL).unwrap();
        assert!((a0 + n as f64).abs() < 1e-9);
        assert!((a1 - a0 - 2.0).abs() < 1e-9);
        let (b0, b1) = lowest_two(&p, 1.0, DEFAULT_TOL).unwrap();
        assert!(b0.abs() < 1e-9 && (b1 - b0 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn scanned_gap_is_positive_with_a_single_crossing() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = unique_ground_state(8, &mut rng);
    let prof = scan_gap(&p, &ScanPolicy::default()).unwrap();
    assert!(prof.gaps.iter().all(|&g| g > 0.0));
    assert_eq!(prof.local_minima, 1);
    assert!(prof.lambdas.windows(2).all(|w| w[0] < w[1]));
    assert!((prof.gap_at_start().unwrap() - 2.0).abs() < 1e-8 && (prof.gap_at_end().unwrap() - 1.0).abs() < 1e-8);
    let opts = LzFitOptions { max_halving_shift: 1.0, ..Default::default() };
    let fit = fit_lz_with(&prof, &opts).unwrap();
    assert!(fit.gap_min > 0.0 && fit.slope > 0.0);
    assert!(fit.window[0] <= fit.lambda_c && fit.lambda_c <= fit.window[1]);
    assert!(fit.halving_shift < 1e-2, "{}", fit.halving_shift);
    assert!((fit.gap_min / prof.gaps[prof.argmin()] - 1.0).abs() < 1e-2);
}

fn relabel_and_gauge(p: &Problem, perm: &[usize], flips: u64) -> Problem {
    let map = |l: Literal| {
        let v = l.var();
        Literal::new(perm[v], l.is_positive() ^ ((flips >> v) & 1 == 1))
    };
    Problem::new(p.n_vars(), p.clauses().iter().map(|c| Clause::new(map(c.a), map(c.b))).collect()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn operator_is_symmetric(seed in any::<u64>(), n in 2usize..10, lambda in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(n, n + 1, &mut rng).unwrap();
        let u: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>() - 0.5).collect();
        let hu = apply_hqac(&p, lambda, &u).unwrap();
        let hv = apply_hqac(&p, lambda, &v).unwrap();
        prop_assert!((dot(&u, &hv) - dot(&hu, &v)).abs() < 1e-12 * (1 << n) as f64);
    }

    #[test]
    fn levels_invariant_under_relabeling_and_gauge(seed in any::<u64>(), n in 2usize..8, lambda in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(n, n + 1, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let q = relabel_and_gauge(&p, &perm, rng.random());
        let (a0, a1) = lowest_two(&p, lambda, DEFAULT_TOL).unwrap();
        let (b0, b1) = lowest_two(&q, lambda, DEFAULT_TOL).unwrap();
        prop_assert!((a0 - b0).abs() < 1e-9 && (a1 - b1).abs() < 1e-9);
    }
}
