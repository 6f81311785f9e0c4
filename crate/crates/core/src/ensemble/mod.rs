//! Multicanonical Monte Carlo in problem space.
//!
//! The chain walks over random 2SAT instances with `M = N + 1` clauses by
//! resampling one clause at a time. Each state is weighted by
//! `exp(W(μ))` with `μ = Ω(E=0)`; unsatisfiable proposals are rejected.
//! Weights are learned by Wang-Landau flattening; a frozen-weight chain then
//! harvests instances with a unique ground state.

mod weights;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sat::{
    enumerate_dos_capped, implication_satisfiable, random_clause, random_problem_with, Clause, ClauseModel,
    DosVector, Problem, DEFAULT_ENUMERATION_CAP,
};

pub use weights::{MuBinning, MucaWeights};

/// Clause count used for every ensemble instance.
pub fn clauses_for(n: usize) -> usize {
    n + 1
}

/// A single clause replacement, kept so it can be undone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClauseMove {
    pub index: usize,
    pub old: Clause,
    pub new: Clause,
}

impl ClauseMove {
    pub fn revert(&self, problem: &mut Problem) {
        let _ = problem.replace_clause(self.index, self.old);
    }
}

/// Replaces one uniformly chosen clause with a fresh random clause.
pub fn clause_move<R: Rng + ?Sized>(problem: &Problem, model: ClauseModel, rng: &mut R) -> (Problem, ClauseMove) {
    let mut next = problem.clone();
    let mv = clause_move_in_place(&mut next, model, rng);
    (next, mv)
}

fn clause_move_in_place<R: Rng + ?Sized>(problem: &mut Problem, model: ClauseModel, rng: &mut R) -> ClauseMove {
    assert!(problem.num_clauses() >= 1, "clause moves need at least one clause");
    let index = rng.random_range(0..problem.num_clauses());
    let new = random_clause(problem.n_vars(), model, rng);
    let old = problem.replace_clause(index, new).expect("index and clause are in range");
    ClauseMove { index, old, new }
}

/// Draws random instances until one is satisfiable.
pub fn random_satisfiable<R: Rng + ?Sized>(n: usize, m: usize, model: ClauseModel, rng: &mut R) -> Result<Problem> {
    loop {
        let p = random_problem_with(n, m, model, rng)?;
        if implication_satisfiable(&p).0 {
            return Ok(p);
        }
    }
}

#[derive(Clone, Debug)]
pub struct MucaState {
    pub current: Problem,
    pub dos: DosVector,
    pub mu: u64,
    pub weights: MucaWeights,
    /// Visits per μ bin since the last reset.
    pub histogram: Vec<u64>,
    pub mod_factor: f64,
    pub model: ClauseModel,
    pub enumeration_cap: usize,
    pub steps: u64,
    pub accepted: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// `Ω(E=0)` of the proposal.
    pub proposed_mu: u64,
}

impl MucaState {
    pub fn new(current: Problem, weights: MucaWeights, model: ClauseModel) -> Result<Self> {
        Self::with_cap(current, weights, model, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(current: Problem, weights: MucaWeights, model: ClauseModel, cap: usize) -> Result<Self> {
        let dos = enumerate_dos_capped(&current, cap)?;
        let mu = dos.ground_degeneracy();
        if mu == 0 {
            return Err(Error::Argument("multicanonical chain must start from a satisfiable instance".into()));
        }
        let bins = weights.num_bins();
        Ok(MucaState {
            current,
            dos,
            mu,
            weights,
            histogram: vec![0; bins],
            mod_factor: std::f64::consts::LN_2,
            model,
            enumeration_cap: cap,
            steps: 0,
            accepted: 0,
        })
    }

    pub fn reset_histogram(&mut self) {
        self.histogram.iter_mut().for_each(|h| *h = 0);
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// One Metropolis update. With `learning` set, the weight of the bin the
/// chain ends in is lowered by the modification factor.
pub fn muca_step<R: Rng + ?Sized>(state: &mut MucaState, learning: bool, rng: &mut R) -> Result<StepOutcome> {
    let mv = clause_move_in_place(&mut state.current, state.model, rng);
    let dos = enumerate_dos_capped(&state.current, state.enumeration_cap)?;
    let proposed_mu = dos.ground_degeneracy();
    let accepted = proposed_mu > 0 && {
        let dw = state.weights.weight(proposed_mu) - state.weights.weight(state.mu);
        dw >= 0.0 || rng.random::<f64>() < dw.exp()
    };
    if accepted {
        state.mu = proposed_mu;
        state.dos = dos;
        state.accepted += 1;
    } else {
        mv.revert(&mut state.current);
    }
    state.steps += 1;
    let bin = state.weights.bin(state.mu);
    state.histogram[bin] += 1;
    if learning {
        state.weights.values[bin] -= state.mod_factor;
    }
    Ok(StepOutcome { accepted, proposed_mu })
}

/// Wang-Landau learning parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningSchedule {
    /// Flat-weight steps used to find the largest μ worth binning.
    pub pilot_steps: u64,
    /// Steps between flatness checks.
    pub check_interval: u64,
    /// Histogram is flat when max/min visits is at most this.
    pub flatness_ratio: f64,
    pub initial_mod_factor: f64,
    /// Learning stops once the modification factor drops below this.
    pub final_mod_factor: f64,
    pub max_steps: u64,
    pub bin_base: f64,
    pub model: ClauseModel,
    pub enumeration_cap: usize,
}

impl LearningSchedule {
    pub fn for_n(n: usize) -> Self {
        let m = clauses_for(n) as u64;
        LearningSchedule {
            pilot_steps: 2000 * m,
            check_interval: 200 * m,
            flatness_ratio: 5.0,
            initial_mod_factor: std::f64::consts::LN_2,
            final_mod_factor: 1.0 / 256.0,
            max_steps: 200_000 * m,
            bin_base: 1.5,
            model: ClauseModel::DistinctPair,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedWeights {
    pub weights: MucaWeights,
    pub pilot_mu_max: u64,
    pub stages: usize,
    pub steps: u64,
    pub final_mod_factor: f64,
}

pub fn histogram_is_flat(histogram: &[u64], ratio: f64) -> bool {
    let min = histogram.iter().copied().min().unwrap_or(0);
    let max = histogram.iter().copied().max().unwrap_or(0);
    min > 0 && max as f64 <= ratio * min as f64
}

pub fn learn_weights<R: Rng + ?Sized>(n: usize, schedule: &LearningSchedule, rng: &mut R) -> Result<LearnedWeights> {
    if n > schedule.enumeration_cap {
        return Err(Error::Capacity { n, cap: schedule.enumeration_cap });
    }
    let m = clauses_for(n);
    let start = random_satisfiable(n, m, schedule.model, rng)?;

    // Pilot at flat weights over a provisional, generous binning.
    let provisional = MuBinning::new(schedule.bin_base, 1u64 << n);
    let mut state = MucaState::with_cap(start, MucaWeights::flat(provisional), schedule.model, schedule.enumeration_cap)?;
    let mut mu_max = state.mu;
    for _ in 0..schedule.pilot_steps {
        muca_step(&mut state, false, rng)?;
        mu_max = mu_max.max(state.mu);
    }
    let mu_max = mu_max.min(1u64 << n);

    let binning = MuBinning::new(schedule.bin_base, mu_max);
    let bins = binning.num_bins();
    state.weights = MucaWeights::flat(binning);
    state.histogram = vec![0; bins];
    state.mod_factor = schedule.initial_mod_factor;

    let mut stages = 0;
    let mut steps = 0u64;
    while state.mod_factor >= schedule.final_mod_factor {
        if steps >= schedule.max_steps {
            state.weights.normalize();
            return Err(Error::WeightsNotConverged {
                steps,
                mod_factor: state.mod_factor,
                partial: Box::new(state.weights),
            });
        }
        for _ in 0..schedule.check_interval {
            muca_step(&mut state, true, rng)?;
        }
        steps += schedule.check_interval;
        if histogram_is_flat(&state.histogram, schedule.flatness_ratio) {
            state.mod_factor /= 2.0;
            state.reset_histogram();
            stages += 1;
        }
    }
    state.weights.normalize();
    Ok(LearnedWeights {
        weights: state.weights,
        pilot_mu_max: mu_max,
        stages,
        steps,
        final_mod_factor: state.mod_factor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarvestOptions {
    /// Chain steps between checkpoints. An instance is harvested when the
    /// chain sits at `μ = 1` on a checkpoint.
    pub spacing: u64,
    /// Steps discarded before the first checkpoint.
    pub burn_in: u64,
    pub max_steps: u64,
    pub model: ClauseModel,
    pub enumeration_cap: usize,
}

impl HarvestOptions {
    pub fn for_n(n: usize) -> Self {
        let m = clauses_for(n) as u64;
        HarvestOptions {
            spacing: 10 * m,
            burn_in: 1000 * m,
            max_steps: 20_000_000,
            model: ClauseModel::DistinctPair,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub spacing: u64,
    pub steps: u64,
    pub acceptance_rate: f64,
    pub weights: MucaWeights,
    pub model: ClauseModel,
}

/// Instances with a unique ground state and their exact densities of states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardEnsemble {
    pub n_vars: usize,
    pub instances: Vec<Problem>,
    pub dos_records: Vec<DosVector>,
    pub provenance: Provenance,
}

impl HardEnsemble {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// `ln Ω(E=1)` per instance.
    pub fn ln_omega1(&self) -> Vec<f64> {
        self.dos_records.iter().map(|d| (d.omega1() as f64).ln()).collect()
    }
}

/// Runs a frozen-weight chain and collects `count` instances with `μ = 1`.
pub fn harvest(n: usize, count: usize, weights: &MucaWeights, options: &HarvestOptions, seed: u64) -> Result<HardEnsemble> {
    if options.spacing == 0 {
        return Err(Error::Argument("harvest spacing must be at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = clauses_for(n);
    let start = random_satisfiable(n, m, options.model, &mut rng)?;
    let mut state = MucaState::with_cap(start, weights.clone(), options.model, options.enumeration_cap)?;
    let mut instances = Vec::with_capacity(count);
    let mut dos_records = Vec::with_capacity(count);
    for _ in 0..options.burn_in {
        muca_step(&mut state, false, &mut rng)?;
    }
    state.steps = 0;
    state.accepted = 0;

    while instances.len() < count {
        if state.steps >= options.max_steps {
            let harvested = instances.len();
            let partial = HardEnsemble {
                n_vars: n,
                instances,
                dos_records,
                provenance: Provenance {
                    seed,
                    spacing: options.spacing,
                    steps: state.steps,
                    acceptance_rate: state.acceptance_rate(),
                    weights: weights.clone(),
                    model: options.model,
                },
            };
            return Err(Error::PartialEnsemble {
                requested: count,
                harvested,
                steps: state.steps,
                partial: Box::new(partial),
            });
        }
        muca_step(&mut state, false, &mut rng)?;
        // Checking at fixed times rather than on first entry keeps the
        // harvest uniform over the μ = 1 sector.
        if state.steps % options.spacing == 0 && state.mu == 1 {
            instances.push(state.current.clone());
            dos_records.push(state.dos.clone());
        }
    }
    Ok(HardEnsemble {
        n_vars: n,
        instances,
        dos_records,
        provenance: Provenance {
            seed,
            spacing: options.spacing,
            steps: state.steps,
            acceptance_rate: state.acceptance_rate(),
            weights: weights.clone(),
            model: options.model,
        },
    })
}
