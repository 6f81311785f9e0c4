//! Run configuration: defaults, TOML files and command-line overrides.

use std::path::{Path, PathBuf};

use hardsat_core::sa::SaSchedule;
use hardsat_core::sat::{ClauseModel, DEFAULT_ENUMERATION_CAP};
use hardsat_core::spectrum::{LzFitOptions, ScanPolicy};
use hardsat_core::stats::RateWeighting;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Problem sizes, kept sorted and free of duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NSpec", into = "Vec<usize>")]
pub struct NRange(Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum NSpec {
    One(usize),
    List(Vec<usize>),
    Text(String),
}

impl TryFrom<NSpec> for NRange {
    type Error = String;

    fn try_from(spec: NSpec) -> Result<Self, String> {
        match spec {
            NSpec::One(n) => Ok(NRange::from_list(vec![n])),
            NSpec::List(v) => Ok(NRange::from_list(v)),
            NSpec::Text(s) => s.parse(),
        }
    }
}

impl From<NRange> for Vec<usize> {
    fn from(r: NRange) -> Self {
        r.0
    }
}

impl NRange {
    pub fn from_list(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        NRange(v)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

impl std::str::FromStr for NRange {
    type Err = String;

    /// Accepts `12`, `8,10,12`, and inclusive ranges `8..13`, `8..=13` or
    /// `8-13`, in any comma-separated combination.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bounds = part
                .split_once("..=")
                .or_else(|| part.split_once(".."))
                .or_else(|| part.split_once('-'));
            let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a problem size"));
            match bounds {
                Some((a, b)) => {
                    let (a, b) = (num(a)?, num(b)?);
                    if a > b {
                        return Err(format!("empty range `{part}`"));
                    }
                    out.extend(a..=b);
                }
                None => out.push(num(part)?),
            }
        }
        if out.is_empty() {
            return Err("no problem sizes given".into());
        }
        Ok(NRange::from_list(out))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    /// Smallest N entering the exponential rate fits.
    pub n_min: usize,
    pub weighting: RateWeighting,
    pub bins: usize,
    pub double_bins: usize,
    pub fold_points: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            n_min: 10,
            weighting: RateWeighting::PointErrors,
            bins: 12,
            double_bins: 10,
            fold_points: 401,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n: NRange,
    pub count: usize,
    pub model: ClauseModel,
    /// Harvest chain budget per N; the size-dependent default when absent.
    pub harvest_max_steps: Option<u64>,
    /// Spectrum and annealing stages only treat the first `limit` instances of
    /// each ensemble.
    pub limit: Option<usize>,
    pub sa: SaSchedule,
    pub scan: ScanPolicy,
    pub lz: LzFitOptions,
    pub report: ReportOptions,
    pub out: PathBuf,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            n: NRange(vec![8]),
            count: 200,
            model: ClauseModel::DistinctPair,
            harvest_max_steps: None,
            limit: None,
            sa: SaSchedule::default(),
            scan: ScanPolicy::default(),
            lz: LzFitOptions::default(),
            report: ReportOptions::default(),
            out: PathBuf::from("hardsat-out"),
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

fn positive(name: &str, ok: bool) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive")))
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        positive("count", self.count > 0)?;
        positive("workers", self.workers > 0)?;
        positive("limit", self.limit != Some(0))?;
        positive("harvest_max_steps", self.harvest_max_steps != Some(0))?;
        if let Some(&n) = self.n.values().iter().find(|&&n| !(2..=DEFAULT_ENUMERATION_CAP).contains(&n)) {
            return Err(CliError::Config(format!("N = {n} outside the supported range 2..={DEFAULT_ENUMERATION_CAP}")));
        }
        self.sa.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let s = &self.scan;
        positive("scan.coarse_intervals", s.coarse_intervals > 0)?;
        positive("scan.refine_factor", s.refine_factor > 1)?;
        positive("scan.critical_r", s.critical_r > 0.0)?;
        positive("scan.tol", s.tol > 0.0)?;
        positive("scan.max_basis", s.max_basis > s.keep && s.keep >= 2)?;
        positive("scan.max_matvecs", s.max_matvecs > 0)?;
        let l = &self.lz;
        positive("lz.critical_r", l.critical_r > 0.0)?;
        positive("lz.min_points", l.min_points > 0)?;
        positive("lz.max_halving_shift", l.max_halving_shift > 0.0)?;
        positive("lz.rel_sigma", l.rel_sigma > 0.0)?;
        let r = &self.report;
        positive("report.bins", r.bins >= 5)?;
        positive("report.double_bins", r.double_bins > 0)?;
        positive("report.fold_points", r.fold_points >= 3)?;
        Ok(())
    }

    /// Identity of the generate stage at one N. The harvest budget only
    /// decides whether a run completes, so it is left out.
    pub fn generate_key(&self, n: usize) -> String {
        stage_key(&serde_json::json!({
            "stage": "generate",
            "seed": self.seed,
            "n": n,
            "count": self.count,
            "model": self.model,
        }))
    }

    pub fn spectrum_key(&self) -> String {
        stage_key(&serde_json::json!({
            "stage": "spectrum",
            "seed": self.seed,
            "scan": self.scan,
            "lz": self.lz,
        }))
    }

    pub fn sa_key(&self) -> String {
        stage_key(&serde_json::json!({
            "stage": "sa",
            "seed": self.seed,
            "sa": self.sa,
        }))
    }
}

pub fn stage_key(value: &serde_json::Value) -> String {
    sha256_hex(value.to_string().as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
