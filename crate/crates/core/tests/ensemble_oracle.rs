use std::collections::BTreeMap;

use hardsat_core::ensemble::{
    clauses_for, harvest, learn_weights, muca_step, random_satisfiable, HarvestOptions, LearningSchedule, MuBinning,
    MucaState, MucaWeights,
};
use hardsat_core::sat::{enumerate_dos, random_problem, Clause, ClauseModel, Literal, Problem};
use hardsat_core::stats::median;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every ordered clause a distinct-pair draw can produce at `n` variables.
fn clause_alphabet(n: usize) -> Vec<Clause> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                for (sa, sb) in [(true, true), (true, false), (false, true), (false, false)] {
                    out.push(Clause::new(Literal::new(a, sa), Literal::new(b, sb)));
                }
            }
        }
    }
    out
}

#[test]
fn frozen_weight_chain_samples_weighted_multiplicities() {
    let n = 3;
    let m = clauses_for(n);
    let alphabet = clause_alphabet(n);
    let mut multiplicity: BTreeMap<u64, f64> = BTreeMap::new();
    let total = alphabet.len().pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let clauses = (0..m)
            .map(|_| {
                let cl = alphabet[c % alphabet.len()];
                c /= alphabet.len();
                cl
            })
            .collect();
        let mu = enumerate_dos(&Problem::new(n, clauses).unwrap()).unwrap().omega(0);
        if mu > 0 {
            *multiplicity.entry(mu).or_default() += 1.0;
        }
    }

    let mut weights = MucaWeights::flat(MuBinning::new(1.5, 8));
    for (b, w) in weights.values.iter_mut().enumerate() {
        *w = 1.5 - 0.6 * b as f64;
    }
    let z: f64 = multiplicity.iter().map(|(&mu, &c)| c * weights.weight(mu).exp()).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let start = random_satisfiable(n, m, ClauseModel::DistinctPair, &mut rng).unwrap();
    let mut state = MucaState::new(start, weights.clone(), ClauseModel::DistinctPair).unwrap();
    let (batches, per_batch) = (50, 40_000);
    let mut freq: BTreeMap<u64, Vec<f64>> = multiplicity.keys().map(|&mu| (mu, vec![0.0; batches])).collect();
    for _ in 0..1000 {
        muca_step(&mut state, false, &mut rng).unwrap();
    }
    for b in 0..batches {
        for _ in 0..per_batch {
            muca_step(&mut state, false, &mut rng).unwrap();
            freq.get_mut(&state.mu).expect("visited μ is enumerable")[b] += 1.0 / per_batch as f64;
        }
    }
    for (mu, f) in &freq {
        let expect = multiplicity[mu] * weights.weight(*mu).exp() / z;
        let mean = f.iter().sum::<f64>() / batches as f64;
        let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let err = (var / batches as f64).sqrt();
        assert!((mean - expect).abs() <= 4.0 * err + 1e-4, "μ={mu}: {mean} vs {expect} ± {err}");
    }
}

fn omega1_counts(values: impl Iterator<Item = u64>) -> BTreeMap<u64, f64> {
    let mut out = BTreeMap::new();
    for v in values {
        *out.entry(v).or_default() += 1.0;
    }
    out
}

#[test]
fn harvest_matches_rejection_sampling() {
    let n = 6;
    let count = 3000;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let lw = learn_weights(n, &LearningSchedule::for_n(n), &mut rng).unwrap();
    let ens = harvest(n, count, &lw.weights, &HarvestOptions::for_n(n), 33).unwrap();
    let chain = omega1_counts(ens.dos_records.iter().map(|d| d.omega1()));

    let mut reference = Vec::new();
    while reference.len() < count {
        let d = enumerate_dos(&random_problem(n, clauses_for(n), &mut rng).unwrap()).unwrap();
        if d.omega(0) == 1 {
            reference.push(d.omega1());
        }
    }
    let iid = omega1_counts(reference.into_iter());

    // Two-sample χ² over Ω₁ values, pooling sparse cells into their neighbours.
    let keys: Vec<u64> = chain.keys().chain(iid.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let (mut a, mut b, mut chi2, mut cells) = (0.0, 0.0, 0.0, 0usize);
    for (i, k) in keys.iter().enumerate() {
        a += chain.get(k).copied().unwrap_or(0.0);
        b += iid.get(k).copied().unwrap_or(0.0);
        if (a + b >= 20.0) || i + 1 == keys.len() {
            chi2 += (a - b).powi(2) / (a + b);
            cells += 1;
            a = 0.0;
            b = 0.0;
        }
    }
    let chi2_dof = chi2 / (cells - 1) as f64;
    assert!(cells >= 5);
    assert!(chi2_dof <= 2.0, "χ²/dof = {chi2_dof} over {cells} cells");
}

#[test]
fn harvested_sequence_decorrelates() {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let lw = learn_weights(n, &LearningSchedule::for_n(n), &mut rng).unwrap();
    let ens = harvest(n, 200, &lw.weights, &HarvestOptions::for_n(n), 35).unwrap();
    let s = ens.ln_omega1();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let var: f64 = s.iter().map(|x| (x - mean).powi(2)).sum();
    let lag1: f64 = s.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    assert!(lag1 / var < 0.2, "lag-1 autocorrelation {}", lag1 / var);
    for (p, d) in ens.instances.iter().zip(&ens.dos_records) {
        assert_eq!(p.num_clauses(), n + 1);
        assert_eq!(&enumerate_dos(p).unwrap(), d);
        assert_eq!(d.omega(0), 1);
    }
}

#[test]
fn learned_weights_favour_unique_ground_states() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let lw = learn_weights(n, &LearningSchedule::for_n(n), &mut rng).unwrap();
    let typical: Vec<f64> = (0..2000)
        .map(|_| enumerate_dos(&random_satisfiable(n, clauses_for(n), ClauseModel::DistinctPair, &mut rng).unwrap()).unwrap().omega(0) as f64)
        .collect();
    let mu = median(&typical).unwrap().round() as u64;
    assert!(mu > 1);
    assert!(lw.weights.weight(1) - lw.weights.weight(mu) > 0.0);
}
