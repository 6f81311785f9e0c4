//! Simulated annealing with single-spin Metropolis updates under a
//! multiplicative temperature schedule.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sat::{Incidence, Problem};
use crate::seed::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaSchedule {
    pub t0: f64,
    pub ratio: f64,
    pub sweeps: usize,
    pub trajectories: usize,
}

impl Default for SaSchedule {
    fn default() -> Self {
        SaSchedule {
            t0: 10.0,
            ratio: 0.7847,
            sweeps: 100,
            trajectories: 64_000,
        }
    }
}

impl SaSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) {
            return Err(Error::Argument(format!("t0 = {} must be positive", self.t0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Argument(format!("ratio = {} must lie in (0, 1)", self.ratio)));
        }
        if self.sweeps == 0 || self.trajectories == 0 {
            return Err(Error::Argument("sweeps and trajectories must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature during sweep `k` (zero-based); it drops by `ratio` after
    /// each sweep.
    pub fn temperature(&self, k: usize) -> f64 {
        self.t0 * self.ratio.powi(k as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaMetrics {
    pub p_success: f64,
    pub std_err: f64,
    pub tau_sa: f64,
    pub n_trajectories: usize,
    pub successes: usize,
}

/// Precomputed single-spin dynamics of one instance.
#[derive(Clone, Debug)]
pub struct Annealer {
    n: usize,
    problem: Problem,
    inc: Incidence,
    max_delta: usize,
}

impl Annealer {
    pub fn new(problem: &Problem) -> Result<Self> {
        problem.check_packable()?;
        let inc = Incidence::new(problem);
        let max_delta = inc.max_degree();
        Ok(Annealer {
            n: problem.n_vars(),
            problem: problem.clone(),
            inc,
            max_delta,
        })
    }

    fn table(&self, t: f64) -> Vec<f64> {
        (0..=self.max_delta).map(|d| (-(d as f64) / t).exp()).collect()
    }

    fn sweep<R: Rng + ?Sized>(&self, bits: &mut u64, accept: &[f64], rng: &mut R) {
        for i in 0..self.n {
            let d = self.inc.flip_delta(*bits, i);
            if d <= 0 || rng.random::<f64>() < accept[d as usize] {
                *bits ^= 1 << i;
            }
        }
    }

    /// Anneals from `start` and returns the final configuration.
    pub fn anneal_from<R: Rng + ?Sized>(&self, start: u64, schedule: &SaSchedule, rng: &mut R) -> u64 {
        let mut bits = start;
        for k in 0..schedule.sweeps {
            let accept = self.table(schedule.temperature(k));
            self.sweep(&mut bits, &accept, rng);
        }
        bits
    }

    /// One trajectory from a uniformly random start; success when the final
    /// configuration has energy 0.
    pub fn trajectory<R: Rng + ?Sized>(&self, schedule: &SaSchedule, rng: &mut R) -> bool {
        let start = self.random_start(rng);
        let end = self.anneal_from(start, schedule, rng);
        self.problem.energy_bits(end) == 0
    }

    /// Runs `sweeps` sweeps at fixed temperature `t` from `start`.
    pub fn relax<R: Rng + ?Sized>(&self, start: u64, t: f64, sweeps: usize, rng: &mut R) -> u64 {
        let accept = self.table(t);
        let mut bits = start;
        for _ in 0..sweeps {
            self.sweep(&mut bits, &accept, rng);
        }
        bits
    }

    pub fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mask = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        rng.random::<u64>() & mask
    }

    /// Histogram of energies visited after each sweep at fixed temperature.
    pub fn sample_fixed_t<R: Rng + ?Sized>(&self, t: f64, sweeps: usize, rng: &mut R) -> Vec<u64> {
        let mut hist = vec![0u64; self.problem.num_clauses() + 1];
        let mut bits = self.random_start(rng);
        let accept = self.table(t);
        for _ in 0..sweeps {
            self.sweep(&mut bits, &accept, rng);
            hist[self.problem.energy_bits(bits)] += 1;
        }
        hist
    }
}

pub fn sa_trajectory<R: Rng + ?Sized>(problem: &Problem, schedule: &SaSchedule, rng: &mut R) -> Result<bool> {
    schedule.validate()?;
    Ok(Annealer::new(problem)?.trajectory(schedule, rng))
}

/// Success fraction over `schedule.trajectories` runs; trajectory `t` draws
/// from stream `t` of `seed`, so the result does not depend on threading.
pub fn sa_success(problem: &Problem, schedule: &SaSchedule, seed: u64) -> Result<SaMetrics> {
    schedule.validate()?;
    let annealer = Annealer::new(problem)?;
    let successes: usize = (0..schedule.trajectories as u64)
        .into_par_iter()
        .map(|t| annealer.trajectory(schedule, &mut stream_rng(seed, t)) as usize)
        .sum();
    let n = schedule.trajectories;
    let p = clamp_success(successes, n);
    Ok(SaMetrics {
        p_success: p,
        std_err: (p * (1.0 - p) / n as f64).sqrt(),
        tau_sa: sa_runtime(p, problem.n_vars(), 0.5, schedule.sweeps)?,
        n_trajectories: n,
        successes,
    })
}

/// Success estimate with half-count correction at 0 and `trajectories`.
pub fn clamp_success(successes: usize, trajectories: usize) -> f64 {
    let n = trajectories as f64;
    if successes == 0 {
        0.5 / n
    } else if successes >= trajectories {
        1.0 - 0.5 / n
    } else {
        successes as f64 / n
    }
}

/// Monte Carlo steps needed to reach success probability `p_target` by
/// independent repetition of one `sweeps`-sweep run.
pub fn sa_runtime(p_success: f64, n: usize, p_target: f64, sweeps: usize) -> Result<f64> {
    if !(p_success > 0.0 && p_success < 1.0) {
        return Err(Error::Domain(format!("success probability {p_success} outside (0, 1)")));
    }
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::Domain(format!("target probability {p_target} outside (0, 1)")));
    }
    Ok((1.0 - p_target).ln() / (1.0 - p_success).ln() * (sweeps * n) as f64)
}
