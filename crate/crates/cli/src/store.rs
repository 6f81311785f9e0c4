//! On-disk results store.
//!
//! ```text
//! <root>/manifest.json
//! <root>/instances/n<N>/ensemble.json      ordered ids and provenance
//! <root>/instances/n<N>/<id>.json          instance and its DOS
//! <root>/spectra/n<N>/<id>.json
//! <root>/sa/n<N>/<id>.json
//! <root>/stats/*.json, *.tsv
//! ```
//!
//! `<id>` is the SHA-256 of the instance file. Records are written once,
//! through a temporary file and a rename.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use hardsat_core::ensemble::{LearnedWeights, Provenance};
use hardsat_core::sa::SaSchedule;
use hardsat_core::sat::{DosVector, Problem};
use hardsat_core::spectrum::{LzFit, LzFitOptions, QaMetrics, ScanPolicy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{io, CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn instance_id(problem: &Problem) -> String {
    sha256_hex(problem.to_json().as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub n: usize,
    pub problem: Problem,
    pub dos: DosVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningSummary {
    pub pilot_mu_max: u64,
    pub stages: usize,
    pub steps: u64,
    pub final_mod_factor: f64,
}

impl From<&LearnedWeights> for LearningSummary {
    fn from(w: &LearnedWeights) -> Self {
        LearningSummary {
            pilot_mu_max: w.pilot_mu_max,
            stages: w.stages,
            steps: w.steps,
            final_mod_factor: w.final_mod_factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleIndex {
    pub n: usize,
    pub version: String,
    pub config_key: String,
    pub seed: u64,
    pub requested: usize,
    /// Instance ids in harvest order; an instance met twice appears twice.
    pub ids: Vec<String>,
    pub omega1: Vec<u64>,
    pub learning: LearningSummary,
    pub provenance: Provenance,
}

impl EnsembleIndex {
    /// The first `limit` distinct ids.
    pub fn distinct_ids(&self, limit: Option<usize>) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.ids
            .iter()
            .filter(|id| seen.insert(id.as_str()))
            .take(limit.unwrap_or(usize::MAX))
            .cloned()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumStatus {
    Ok,
    FitFailed,
    SolverFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub instance_id: String,
    pub n: usize,
    pub version: String,
    pub config_key: String,
    pub seed: u64,
    pub status: SpectrumStatus,
    pub error: Option<String>,
    pub lambda: Vec<f64>,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub gap_at_0: Option<f64>,
    pub gap_at_1: Option<f64>,
    pub grid_gap_min: Option<f64>,
    pub local_minima: usize,
    pub anomalies: Vec<String>,
    pub matvecs: usize,
    pub fit: Option<LzFit>,
    pub qa: Option<QaMetrics>,
    pub scan: ScanPolicy,
    pub lz: LzFitOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaRecord {
    pub instance_id: String,
    pub n: usize,
    pub version: String,
    pub config_key: String,
    /// Trajectory `t` draws from stream `t` of this seed.
    pub seed: u64,
    pub schedule: SaSchedule,
    pub p_success: f64,
    pub std_err: f64,
    pub tau_sa: f64,
    pub trajectories: usize,
    pub successes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub generate: BTreeMap<String, serde_json::Value>,
    pub spectrum: Option<serde_json::Value>,
    pub sa: Option<serde_json::Value>,
}

#[derive(Clone, Debug)]
pub struct ResultsStore {
    root: PathBuf,
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("records serialize");
    v.push(b'\n');
    v
}

impl ResultsStore {
    /// Opens `root`, creating it if needed, and checks that it is writable.
    pub fn open(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(io(format!("cannot create {}", root.display())))?;
        tempfile::NamedTempFile::new_in(root).map_err(io(format!("{} is not writable", root.display())))?;
        Ok(ResultsStore { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn instances_dir(&self, n: usize) -> PathBuf {
        self.root.join("instances").join(format!("n{n}"))
    }

    pub fn ensemble_path(&self, n: usize) -> PathBuf {
        self.instances_dir(n).join("ensemble.json")
    }

    pub fn partial_ensemble_path(&self, n: usize) -> PathBuf {
        self.instances_dir(n).join("ensemble.partial.json")
    }

    pub fn instance_path(&self, n: usize, id: &str) -> PathBuf {
        self.instances_dir(n).join(format!("{id}.json"))
    }

    pub fn spectrum_path(&self, n: usize, id: &str) -> PathBuf {
        self.root.join("spectra").join(format!("n{n}")).join(format!("{id}.json"))
    }

    pub fn sa_path(&self, n: usize, id: &str) -> PathBuf {
        self.root.join("sa").join(format!("n{n}")).join(format!("{id}.json"))
    }

    pub fn stats_dir(&self) -> PathBuf {
        self.root.join("stats")
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn write_bytes(&self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        let dir = path.parent().expect("store paths have a parent");
        std::fs::create_dir_all(dir).map_err(io(format!("cannot create {}", dir.display())))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(format!("cannot write in {}", dir.display())))?;
        tmp.write_all(bytes).map_err(io(format!("cannot write {}", path.display())))?;
        tmp.persist(path).map_err(|e| CliError::Io {
            context: format!("cannot move record into {}", path.display()),
            source: e.error,
        })?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> CliResult<()> {
        self.write_bytes(path, &to_json_bytes(value))
    }

    /// Writes `value` unless an identical file is already present.
    pub fn write_once<T: Serialize>(&self, path: &Path, value: &T) -> CliResult<()> {
        let bytes = to_json_bytes(value);
        match std::fs::read(path) {
            Ok(existing) if existing == bytes => Ok(()),
            Ok(_) => Err(CliError::Conflict(format!("{} exists with different content", path.display()))),
            Err(_) => self.write_bytes(path, &bytes),
        }
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &Path) -> CliResult<Option<T>> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::Io { context: format!("cannot read {}", path.display()), source: e }),
        };
        serde_json::from_str(&text).map(Some).map_err(|e| CliError::Record {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }

    pub fn ensemble(&self, n: usize) -> CliResult<Option<EnsembleIndex>> {
        self.read_json(&self.ensemble_path(n))
    }

    pub fn instance(&self, n: usize, id: &str) -> CliResult<InstanceRecord> {
        let path = self.instance_path(n, id);
        let rec: InstanceRecord = self.read_json(&path)?.ok_or_else(|| CliError::Record {
            path: path.display().to_string(),
            detail: "listed in the ensemble but missing".into(),
        })?;
        if instance_id(&rec.problem) != id {
            return Err(CliError::Record {
                path: path.display().to_string(),
                detail: "content does not match its hash".into(),
            });
        }
        Ok(rec)
    }

    pub fn spectrum(&self, n: usize, id: &str) -> CliResult<Option<SpectrumRecord>> {
        self.read_json(&self.spectrum_path(n, id))
    }

    pub fn sa(&self, n: usize, id: &str) -> CliResult<Option<SaRecord>> {
        self.read_json(&self.sa_path(n, id))
    }

    pub fn manifest(&self) -> CliResult<Manifest> {
        Ok(self.read_json(&self.manifest_path())?.unwrap_or_else(|| Manifest {
            version: VERSION.into(),
            ..Default::default()
        }))
    }

    pub fn update_manifest(&self, f: impl FnOnce(&mut Manifest)) -> CliResult<()> {
        let mut m = self.manifest()?;
        m.version = VERSION.into();
        f(&mut m);
        self.write_json(&self.manifest_path(), &m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once_refuses_changes() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResultsStore::open(dir.path()).unwrap();
        let p = store.root().join("a/b.json");
        store.write_once(&p, &1u32).unwrap();
        store.write_once(&p, &1u32).unwrap();
        assert!(matches!(store.write_once(&p, &2u32), Err(CliError::Conflict(_))));
        assert_eq!(store.read_json::<u32>(&p).unwrap(), Some(1));
        assert_eq!(store.read_json::<u32>(&store.root().join("none.json")).unwrap(), None);
        let leftovers = std::fs::read_dir(store.root().join("a")).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn distinct_ids_keep_order() {
        let idx = EnsembleIndex {
            n: 3,
            version: VERSION.into(),
            config_key: String::new(),
            seed: 0,
            requested: 4,
            ids: ["b", "a", "b", "c"].map(String::from).to_vec(),
            omega1: vec![1, 2, 1, 3],
            learning: LearningSummary { pilot_mu_max: 1, stages: 0, steps: 0, final_mod_factor: 0.0 },
            provenance: Provenance {
                seed: 0,
                spacing: 1,
                steps: 0,
                acceptance_rate: 0.0,
                weights: hardsat_core::ensemble::MucaWeights::flat(hardsat_core::ensemble::MuBinning::new(1.5, 2)),
                model: Default::default(),
            },
        };
        assert_eq!(idx.distinct_ids(None), ["b", "a", "c"]);
        assert_eq!(idx.distinct_ids(Some(2)), ["b", "a"]);
    }
}
