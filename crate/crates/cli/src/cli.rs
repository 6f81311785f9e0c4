//! Command-line surface of the `hardsat` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hardsat_core::sat::ClauseModel;
use hardsat_core::stats::RateWeighting;

use crate::config::{NRange, RunConfig};
use crate::error::CliResult;
use crate::store::ResultsStore;
use crate::{report, stages};

#[derive(Debug, Parser)]
#[command(name = "hardsat", version, about = "Hard 2SAT ensembles, their adiabatic gaps and annealing run-times")]
pub struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Results store directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn multicanonical weights and harvest instances with one solution.
    Generate(GenerateArgs),
    /// Scan the lowest gap of every instance and fit the avoided crossing.
    Spectrum(SpectrumArgs),
    /// Estimate simulated-annealing success and run-time per instance.
    Sa(SaArgs),
    /// Fit reports and plot tables from the records in the store.
    Report(ReportArgs),
    /// All four stages in order.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Model {
    DistinctPair,
    AnyPair,
}

impl From<Model> for ClauseModel {
    fn from(m: Model) -> Self {
        match m {
            Model::DistinctPair => ClauseModel::DistinctPair,
            Model::AnyPair => ClauseModel::AnyPair,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Weighting {
    PointErrors,
    Residuals,
}

impl From<Weighting> for RateWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::PointErrors => RateWeighting::PointErrors,
            Weighting::Residuals => RateWeighting::Residuals,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct SizeArgs {
    /// Problem sizes: `12`, `8,10` or an inclusive range `8..13`.
    #[arg(long)]
    pub n: Option<NRange>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub sizes: SizeArgs,
    /// Instances per N.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    #[arg(long)]
    pub harvest_max_steps: Option<u64>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub sizes: SizeArgs,
    /// Only the first L distinct instances of each ensemble.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub coarse_intervals: Option<usize>,
    /// Critical-region size, in units of gap/slope, that refinement resolves.
    #[arg(long)]
    pub critical_r: Option<f64>,
    /// Width of the LZ fit window in the same units.
    #[arg(long)]
    pub fit_r: Option<f64>,
    /// Eigensolver residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_halving_shift: Option<f64>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct SaArgs {
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub trajectories: Option<usize>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Smallest N in the rate fits.
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long, value_enum)]
    pub weighting: Option<Weighting>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub generate: GenerateArgs,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub n_min: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GenerateArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.n, self.sizes.n.clone());
        set(&mut c.count, self.count);
        set(&mut c.model, self.model.map(Into::into));
        if self.harvest_max_steps.is_some() {
            c.harvest_max_steps = self.harvest_max_steps;
        }
    }
}

impl SpectrumArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.n, self.sizes.n.clone());
        if self.limit.is_some() {
            c.limit = self.limit;
        }
        set(&mut c.scan.coarse_intervals, self.coarse_intervals);
        set(&mut c.scan.critical_r, self.critical_r);
        set(&mut c.lz.critical_r, self.fit_r);
        set(&mut c.scan.tol, self.tol);
        set(&mut c.lz.max_halving_shift, self.max_halving_shift);
    }
}

impl SaArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.n, self.sizes.n.clone());
        if self.limit.is_some() {
            c.limit = self.limit;
        }
        set(&mut c.sa.t0, self.t0);
        set(&mut c.sa.ratio, self.ratio);
        set(&mut c.sa.sweeps, self.sweeps);
        set(&mut c.sa.trajectories, self.trajectories);
    }
}

impl ReportArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.n, self.sizes.n.clone());
        if self.limit.is_some() {
            c.limit = self.limit;
        }
        set(&mut c.report.n_min, self.n_min);
        set(&mut c.report.weighting, self.weighting.map(Into::into));
        set(&mut c.report.bins, self.bins);
    }
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        set(&mut c.seed, self.seed);
        set(&mut c.out, self.out.clone());
        set(&mut c.workers, self.workers);
        match &self.command {
            Command::Generate(a) => a.apply(&mut c),
            Command::Spectrum(a) => a.apply(&mut c),
            Command::Sa(a) => a.apply(&mut c),
            Command::Report(a) => a.apply(&mut c),
            Command::Run(a) => {
                a.generate.apply(&mut c);
                if a.limit.is_some() {
                    c.limit = a.limit;
                }
                set(&mut c.sa.trajectories, a.trajectories);
                set(&mut c.report.n_min, a.n_min);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_stage(name: &str, summaries: &[stages::StageSummary]) {
    for s in summaries {
        println!("{name}: {s}");
    }
}

fn run_report(config: &RunConfig, store: &ResultsStore) -> CliResult<()> {
    let r = report::run(config, store)?;
    for note in &r.notes {
        eprintln!("note: {note}");
    }
    if let Some(t) = &r.table1 {
        if let Some(fit) = t.median_rate.ok() {
            println!("report: r_DOS = {:.4} ± {:.4} (χ²/dof {:.2})", fit.rate, fit.rate_err, fit.chi2_dof);
        }
    }
    if let Some(fit) = r.table3.as_ref().and_then(|t| t.median_rate.ok()) {
        println!("report: r_SA = {:.4} ± {:.4} (χ²/dof {:.2})", fit.rate, fit.rate_err, fit.chi2_dof);
    }
    if let Some(t) = &r.table4 {
        if let Some(g) = t.r_gap.ok() {
            println!("report: r_GAP = {:.4} ± {:.4}", g.rate, g.rate_err);
        }
        if let Some(q) = t.r_qa.ok() {
            println!("report: r_QA = {:.4} ± {:.4}", q.rate, q.rate_err);
        }
    }
    println!("report: written to {}", store.stats_dir().display());
    match report::refusal_error(&r) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let config = cli.resolve()?;
    let store = ResultsStore::open(&config.out)?;
    match &cli.command {
        Command::Generate(_) => {
            for s in stages::generate(&config, &store)? {
                println!("generate: {s}");
            }
            Ok(())
        }
        Command::Spectrum(_) => {
            let s = stages::spectrum(&config, &store)?;
            print_stage("spectrum", &s);
            stages::check_failures("spectrum", &s)
        }
        Command::Sa(_) => {
            let s = stages::anneal(&config, &store)?;
            print_stage("sa", &s);
            Ok(())
        }
        Command::Report(_) => run_report(&config, &store),
        Command::Run(_) => {
            for s in stages::generate(&config, &store)? {
                println!("generate: {s}");
            }
            let spectra = stages::spectrum(&config, &store)?;
            print_stage("spectrum", &spectra);
            print_stage("sa", &stages::anneal(&config, &store)?);
            run_report(&config, &store)?;
            stages::check_failures("spectrum", &spectra)
        }
    }
}

/// Parses `args` and runs them, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
