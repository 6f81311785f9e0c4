use hardsat_core::sa::Annealer;
use hardsat_core::sat::{enumerate_dos, Clause, Literal, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lit(v: usize, p: bool) -> Literal {
    Literal::new(v, p)
}

/// Pearson χ² of `observed` against weights, and its degrees of freedom.
fn chi2(observed: &[u64], weights: &[f64]) -> (f64, usize) {
    let total: u64 = observed.iter().sum();
    let z: f64 = weights.iter().sum();
    let mut chi2 = 0.0;
    let mut cells = 0usize;
    for (&o, &w) in observed.iter().zip(weights) {
        let e = total as f64 * w / z;
        if e > 0.0 {
            chi2 += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(o, 0);
        }
    }
    (chi2, cells - 1)
}

fn instance() -> Problem {
    Problem::new(
        3,
        vec![
            Clause::new(lit(0, true), lit(1, false)),
            Clause::new(lit(1, true), lit(2, true)),
            Clause::new(lit(0, false), lit(2, false)),
            Clause::new(lit(0, true), lit(2, true)),
        ],
    )
    .unwrap()
}

#[test]
fn relaxed_configurations_are_boltzmann_distributed() {
    let p = instance();
    let annealer = Annealer::new(&p).unwrap();
    let (mut total, mut dof) = (0.0, 0);
    for (seed, t) in [(1u64, 0.7), (2, 1.5), (3, 4.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hist = vec![0u64; 8];
        for _ in 0..40_000 {
            let start = annealer.random_start(&mut rng);
            hist[annealer.relax(start, t, 30, &mut rng) as usize] += 1;
        }
        let w: Vec<f64> = (0..8u64).map(|x| (-(p.energy_bits(x) as f64) / t).exp()).collect();
        let (c, d) = chi2(&hist, &w);
        total += c;
        dof += d;
    }
    assert!(total / dof as f64 <= 2.0, "χ²/dof = {}", total / dof as f64);
}

#[test]
fn sweep_series_visits_low_energies_most() {
    let p = instance();
    let annealer = Annealer::new(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = annealer.sample_fixed_t(0.5, 100_000, &mut rng);
    assert_eq!(h.iter().sum::<u64>(), 100_000);
    let dos = enumerate_dos(&p).unwrap();
    let z: f64 = (0..h.len()).map(|e| dos.omega(e) as f64 * (-(e as f64) / 0.5).exp()).sum();
    let expect = dos.omega(0) as f64 / z;
    assert!((h[0] as f64 / 1e5 - expect).abs() < 0.02, "{} vs {expect}", h[0] as f64 / 1e5);
}
