//! The generate, spectrum and annealing stages.

use hardsat_core::ensemble::{harvest, learn_weights, HardEnsemble, HarvestOptions, LearningSchedule};
use hardsat_core::sa::sa_success;
use hardsat_core::seed::{derive_seed, key_id};
use hardsat_core::spectrum::{fit_lz_with, qa_metrics, scan_gap};
use hardsat_core::stats::median;
use hardsat_core::Error as CoreError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::store::{
    instance_id, EnsembleIndex, InstanceRecord, LearningSummary, ResultsStore, SaRecord, SpectrumRecord,
    SpectrumStatus, VERSION,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerateSummary {
    pub n: usize,
    pub skipped: bool,
    pub instances: usize,
    pub distinct: usize,
    pub steps: u64,
    pub acceptance_rate: f64,
    pub median_ln_omega1: f64,
    pub weight_bins: usize,
    pub learning_stages: usize,
}

impl std::fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let state = if self.skipped { " (already complete)" } else { "" };
        write!(
            f,
            "N={:<3} {} instances ({} distinct), {} harvest steps, acceptance {:.3}, median ln Ω1 {:.3}, {} μ bins, {} WL stages{}",
            self.n,
            self.instances,
            self.distinct,
            self.steps,
            self.acceptance_rate,
            self.median_ln_omega1,
            self.weight_bins,
            self.learning_stages,
            state
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageSummary {
    pub n: usize,
    pub computed: usize,
    pub skipped: usize,
    /// Flagged records among both computed and skipped ones.
    pub failed: usize,
}

impl std::fmt::Display for StageSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "N={:<3} {} computed, {} already present, {} failed",
            self.n, self.computed, self.skipped, self.failed
        )
    }
}

fn pool(config: &RunConfig) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", config.workers)))
}

fn summarize(index: &EnsembleIndex, skipped: bool) -> GenerateSummary {
    let ln: Vec<f64> = index.omega1.iter().map(|&o| (o as f64).ln()).collect();
    GenerateSummary {
        n: index.n,
        skipped,
        instances: index.ids.len(),
        distinct: index.distinct_ids(None).len(),
        steps: index.provenance.steps,
        acceptance_rate: index.provenance.acceptance_rate,
        median_ln_omega1: median(&ln).unwrap_or(f64::NAN),
        weight_bins: index.provenance.weights.values.len(),
        learning_stages: index.learning.stages,
    }
}

fn index_for(
    ensemble: &HardEnsemble,
    config: &RunConfig,
    seed: u64,
    learning: LearningSummary,
    store: &ResultsStore,
) -> CliResult<EnsembleIndex> {
    let n = ensemble.n_vars;
    let mut ids = Vec::with_capacity(ensemble.len());
    for (problem, dos) in ensemble.instances.iter().zip(&ensemble.dos_records) {
        let id = instance_id(problem);
        let rec = InstanceRecord { id: id.clone(), n, problem: problem.clone(), dos: dos.clone() };
        store.write_once(&store.instance_path(n, &id), &rec)?;
        ids.push(id);
    }
    Ok(EnsembleIndex {
        n,
        version: VERSION.into(),
        config_key: config.generate_key(n),
        seed,
        requested: config.count,
        ids,
        omega1: ensemble.dos_records.iter().map(|d| d.omega1()).collect(),
        learning,
        provenance: ensemble.provenance.clone(),
    })
}

fn generate_one(config: &RunConfig, store: &ResultsStore, n: usize) -> CliResult<GenerateSummary> {
    let key = config.generate_key(n);
    if let Some(existing) = store.ensemble(n)? {
        if existing.config_key == key {
            return Ok(summarize(&existing, true));
        }
        return Err(CliError::Conflict(format!(
            "ensemble for N={n} in {} was generated under another configuration; use a fresh --out",
            store.root().display()
        )));
    }
    let mut schedule = LearningSchedule::for_n(n);
    schedule.model = config.model;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "weights", n as u64));
    let learned = learn_weights(n, &schedule, &mut rng).map_err(|e| match e {
        CoreError::WeightsNotConverged { steps, mod_factor, .. } => CliError::Numerical(format!(
            "N={n}: weight learning stopped after {steps} steps at modification factor {mod_factor:.3e}"
        )),
        other => other.into(),
    })?;
    let mut options = HarvestOptions::for_n(n);
    options.model = config.model;
    if let Some(max) = config.harvest_max_steps {
        options.max_steps = max;
    }
    let seed = derive_seed(config.seed, "generate", n as u64);
    match harvest(n, config.count, &learned.weights, &options, seed) {
        Ok(ensemble) => {
            let index = index_for(&ensemble, config, seed, LearningSummary::from(&learned), store)?;
            store.write_json(&store.ensemble_path(n), &index)?;
            let _ = std::fs::remove_file(store.partial_ensemble_path(n));
            Ok(summarize(&index, false))
        }
        Err(CoreError::PartialEnsemble { requested, harvested, steps, partial }) => {
            let index = index_for(&partial, config, seed, LearningSummary::from(&learned), store)?;
            let path = store.partial_ensemble_path(n);
            store.write_json(&path, &index)?;
            Err(CliError::Numerical(format!(
                "N={n}: harvested {harvested} of {requested} instances within {steps} steps; the partial set is in {}. \
                 The chain is deterministic, so rerunning with a larger --harvest-max-steps (e.g. {}) reproduces these \
                 instances and completes the ensemble.",
                path.display(),
                steps.saturating_mul(2)
            )))
        }
        Err(e) => Err(e.into()),
    }
}

/// Harvests `config.count` instances at every N and writes them to the
/// store. Completed sizes are left untouched.
pub fn generate(config: &RunConfig, store: &ResultsStore) -> CliResult<Vec<GenerateSummary>> {
    config.validate()?;
    let results: Vec<CliResult<GenerateSummary>> =
        pool(config)?.install(|| config.n.values().par_iter().map(|&n| generate_one(config, store, n)).collect());
    let mut summaries = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                } else {
                    eprintln!("error: {e}");
                }
            }
        }
    }
    store.update_manifest(|m| {
        for s in &summaries {
            m.generate.insert(
                format!("n{}", s.n),
                serde_json::json!({
                    "config_key": config.generate_key(s.n),
                    "seed": config.seed,
                    "count": config.count,
                    "model": config.model,
                }),
            );
        }
    })?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(summaries),
    }
}

fn require_ensemble(store: &ResultsStore, n: usize, stage: &'static str) -> CliResult<EnsembleIndex> {
    store.ensemble(n)?.ok_or_else(|| CliError::Dependency {
        stage: "generate",
        detail: format!("{stage} needs the N={n} ensemble; run `hardsat generate` first"),
    })
}

fn spectrum_record(config: &RunConfig, store: &ResultsStore, n: usize, id: &str) -> CliResult<SpectrumRecord> {
    let rec = store.instance(n, id)?;
    let seed = derive_seed(config.seed, "spectrum", key_id(id));
    let mut policy = config.scan.clone();
    policy.seed = seed;
    let mut out = SpectrumRecord {
        instance_id: id.to_string(),
        n,
        version: VERSION.into(),
        config_key: config.spectrum_key(),
        seed,
        status: SpectrumStatus::Ok,
        error: None,
        lambda: Vec::new(),
        e0: Vec::new(),
        e1: Vec::new(),
        gap_at_0: None,
        gap_at_1: None,
        grid_gap_min: None,
        local_minima: 0,
        anomalies: Vec::new(),
        matvecs: 0,
        fit: None,
        qa: None,
        scan: policy.clone(),
        lz: config.lz.clone(),
    };
    let profile = match scan_gap(&rec.problem, &policy) {
        Ok(p) => p,
        Err(e @ (CoreError::Solver { .. } | CoreError::Fit { .. })) => {
            out.status = SpectrumStatus::SolverFailed;
            out.error = Some(e.to_string());
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    out.gap_at_0 = profile.gap_at_start();
    out.gap_at_1 = profile.gap_at_end();
    out.grid_gap_min = Some(profile.gaps[profile.argmin()]);
    out.local_minima = profile.local_minima;
    out.anomalies = profile.anomalies.clone();
    out.matvecs = profile.matvecs;
    match fit_lz_with(&profile, &config.lz) {
        Ok(fit) => {
            out.qa = Some(qa_metrics(&fit));
            out.fit = Some(fit);
        }
        Err(e) => {
            out.status = SpectrumStatus::FitFailed;
            out.error = Some(e.to_string());
        }
    }
    out.lambda = profile.lambdas;
    out.e0 = profile.e0;
    out.e1 = profile.e1;
    Ok(out)
}

fn sa_record(config: &RunConfig, store: &ResultsStore, n: usize, id: &str) -> CliResult<SaRecord> {
    let rec = store.instance(n, id)?;
    let seed = derive_seed(config.seed, "sa", key_id(id));
    let m = sa_success(&rec.problem, &config.sa, seed)?;
    Ok(SaRecord {
        instance_id: id.to_string(),
        n,
        version: VERSION.into(),
        config_key: config.sa_key(),
        seed,
        schedule: config.sa.clone(),
        p_success: m.p_success,
        std_err: m.std_err,
        tau_sa: m.tau_sa,
        trajectories: m.n_trajectories,
        successes: m.successes,
    })
}

enum Outcome {
    Computed { failed: bool },
    Skipped { failed: bool },
}

/// Runs `compute` for every instance of every N that has no record yet.
fn per_instance<T, R, C, F>(
    config: &RunConfig,
    store: &ResultsStore,
    stage: &'static str,
    key: &str,
    read: R,
    compute: C,
    failed: F,
) -> CliResult<Vec<StageSummary>>
where
    T: Serialize + Send,
    R: Fn(usize, &str) -> CliResult<Option<(String, T)>> + Sync,
    C: Fn(usize, &str) -> CliResult<(std::path::PathBuf, T)> + Sync,
    F: Fn(&T) -> bool + Sync,
{
    config.validate()?;
    let indices = config
        .n
        .values()
        .iter()
        .map(|&n| require_ensemble(store, n, stage))
        .collect::<CliResult<Vec<_>>>()?;
    let pool = pool(config)?;
    let mut summaries = Vec::new();
    for index in &indices {
        let n = index.n;
        let ids = index.distinct_ids(config.limit);
        let outcomes: Vec<CliResult<Outcome>> = pool.install(|| {
            ids.par_iter()
                .map(|id| {
                    if let Some((existing_key, rec)) = read(n, id)? {
                        if existing_key != key {
                            return Err(CliError::Conflict(format!(
                                "{stage} record for {id} (N={n}) was written under another configuration; use a fresh --out"
                            )));
                        }
                        return Ok(Outcome::Skipped { failed: failed(&rec) });
                    }
                    let (path, rec) = compute(n, id)?;
                    let bad = failed(&rec);
                    store.write_json(&path, &rec)?;
                    Ok(Outcome::Computed { failed: bad })
                })
                .collect()
        });
        let mut s = StageSummary { n, computed: 0, skipped: 0, failed: 0 };
        for o in outcomes {
            match o? {
                Outcome::Skipped { failed } => {
                    s.skipped += 1;
                    s.failed += failed as usize;
                }
                Outcome::Computed { failed } => {
                    s.computed += 1;
                    s.failed += failed as usize;
                }
            }
        }
        summaries.push(s);
    }
    Ok(summaries)
}

/// Scans the gap of every ensemble instance and fits the avoided crossing.
/// Instances whose solver or fit fails keep a flagged record; the batch
/// continues.
pub fn spectrum(config: &RunConfig, store: &ResultsStore) -> CliResult<Vec<StageSummary>> {
    let key = config.spectrum_key();
    let summaries = per_instance(
        config,
        store,
        "spectrum",
        &key,
        |n, id| Ok(store.spectrum(n, id)?.map(|r| (r.config_key.clone(), r))),
        |n, id| Ok((store.spectrum_path(n, id), spectrum_record(config, store, n, id)?)),
        |r: &SpectrumRecord| r.status != SpectrumStatus::Ok,
    )?;
    store.update_manifest(|m| {
        m.spectrum = Some(serde_json::json!({ "config_key": key, "seed": config.seed, "scan": config.scan, "lz": config.lz }));
    })?;
    Ok(summaries)
}

pub fn anneal(config: &RunConfig, store: &ResultsStore) -> CliResult<Vec<StageSummary>> {
    let key = config.sa_key();
    let summaries = per_instance(
        config,
        store,
        "sa",
        &key,
        |n, id| Ok(store.sa(n, id)?.map(|r| (r.config_key.clone(), r))),
        |n, id| Ok((store.sa_path(n, id), sa_record(config, store, n, id)?)),
        |_: &SaRecord| false,
    )?;
    store.update_manifest(|m| {
        m.sa = Some(serde_json::json!({ "config_key": key, "seed": config.seed, "schedule": config.sa }));
    })?;
    Ok(summaries)
}

/// Counts failed records across summaries as a numerical error.
pub fn check_failures(stage: &str, summaries: &[StageSummary]) -> CliResult<()> {
    let failed: usize = summaries.iter().map(|s| s.failed).sum();
    if failed > 0 {
        return Err(CliError::Numerical(format!(
            "{stage}: {failed} instances failed; their records carry status and error fields"
        )));
    }
    Ok(())
}
