//! Fit reports (JSON) and plot tables (TSV) for the table and figure
//! analogs, built from the records in a store.

use std::collections::HashMap;

use hardsat_core::stats::{
    double_histogram, fit_pdf, fit_rate_with, fold_success_pdf, histogram, histogram_range, local_maxima,
    log_slope, logit_grid, lz_success, quantile_with_error, repeat_success, sa_dos_fit, tune_r, DoubleHistogram,
    Histogram, LogSlope, PdfFamily, PdfFit, RateFit, RatePoint, RateWeighting, TuneMode, XiDensity, DEFAULT_EPS,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::store::{EnsembleIndex, ResultsStore, SaRecord, SpectrumRecord, SpectrumStatus};

/// A fit that either produced a value or failed with a reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Fitted<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> Fitted<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Fitted::Ok(v) => Some(v),
            Fitted::Failed { .. } => None,
        }
    }
}

impl<T, E: std::fmt::Display> From<Result<T, E>> for Fitted<T> {
    fn from(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Fitted::Ok(v),
            Err(e) => Fitted::Failed { error: e.to_string() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileRow {
    pub n: usize,
    pub count: usize,
    pub median: f64,
    pub median_err: f64,
    pub deciles: Vec<f64>,
    pub decile_errs: Vec<f64>,
}

/// Per-N quantiles of one quantity and the exponential rates of its median
/// and deciles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileTable {
    pub quantity: String,
    pub n_min: usize,
    pub weighting: RateWeighting,
    pub rows: Vec<QuantileRow>,
    pub median_rate: Fitted<RateFit>,
    /// D1 to D9.
    pub decile_rates: Vec<Fitted<RateFit>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rate {
    pub rate: f64,
    pub rate_err: f64,
    pub chi2_dof: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRates {
    pub xi_gap: QuantileTable,
    pub xi_lz: QuantileTable,
    pub r_gap: Fitted<Rate>,
    pub r_lz: Fitted<Rate>,
    /// `τ_QA ∝ Ξ_LZ²`, so its rate is twice that of Ξ_LZ.
    pub r_qa: Fitted<Rate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdfRow {
    pub n: usize,
    pub quantity: String,
    pub count: usize,
    pub median: f64,
    /// Histogram of the values divided by their median.
    pub histogram: Histogram,
    pub weibull: Fitted<PdfFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdfTable {
    pub rows: Vec<PdfRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Correlation {
    pub n: usize,
    pub count: usize,
    /// Pearson correlation of the logarithms.
    pub log_correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub fit: LogSlope,
    pub coeff_errs: [f64; 4],
    pub chi2_dof: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopePoint {
    pub xi: f64,
    pub s_qa: f64,
    pub s_qa_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QaSlope {
    /// Ns pooled into the fit.
    pub ns: Vec<usize>,
    pub fit: Fitted<SlopeFit>,
    /// Slope on an even grid over the fitted ln ξ range.
    pub curve: Vec<SlopePoint>,
    pub min_slope: f64,
    /// ξ at and above which the hardest fifth of the instances lie.
    pub hardest_quintile_xi: f64,
    pub hardest_quintile_slope: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaDosRow {
    pub n: usize,
    pub count: usize,
    pub amplitude: f64,
    pub delta_alpha: f64,
    pub delta_alpha_err: f64,
    pub chi2_dof: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaDos {
    pub rows: Vec<Fitted<SaDosRow>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoubleRow {
    pub n: usize,
    pub count: usize,
    pub r_sa: f64,
    pub r_qa: f64,
    pub histogram: DoubleHistogram,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldRow {
    pub n: usize,
    pub count: usize,
    pub xi_lz_fit: PdfFit,
    pub r: f64,
    pub integral: f64,
    pub mean: f64,
    pub maxima: Vec<f64>,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Histogram of the per-instance success probabilities at the same `R`.
    pub empirical: Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Refusal {
    pub artifact: String,
    pub stage: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub table1: Option<QuantileTable>,
    pub table2: Option<PdfTable>,
    pub table3: Option<QuantileTable>,
    pub table4: Option<GapRates>,
    pub fig4: Option<Vec<Correlation>>,
    pub fig5: Option<QaSlope>,
    pub fig6: Option<SaDos>,
    pub fig7: Option<Vec<Fitted<DoubleRow>>>,
    pub fig8: Option<Vec<Fitted<FoldRow>>>,
    pub refused: Vec<Refusal>,
    pub notes: Vec<String>,
}

struct SizeData {
    n: usize,
    index: EnsembleIndex,
    /// Aligned with the distinct ids treated by the later stages.
    omega1: Vec<f64>,
    ids: Vec<String>,
    spectra: Option<Vec<SpectrumRecord>>,
    sa: Option<Vec<SaRecord>>,
}

impl SizeData {
    /// `(id position, ξ_GAP, Ξ_LZ, τ_QA)` of the usable spectra.
    fn qa(&self) -> Vec<(usize, f64, f64, f64)> {
        self.spectra
            .iter()
            .flatten()
            .enumerate()
            .filter(|(_, r)| r.status == SpectrumStatus::Ok)
            .filter_map(|(i, r)| r.qa.map(|q| (i, q.xi_gap, q.xi_lz, q.tau_qa)))
            .collect()
    }
}

fn load(config: &RunConfig, store: &ResultsStore, notes: &mut Vec<String>) -> CliResult<Vec<SizeData>> {
    let mut out = Vec::new();
    for &n in config.n.values() {
        let Some(index) = store.ensemble(n)? else {
            notes.push(format!("N={n}: no ensemble"));
            continue;
        };
        let lookup: HashMap<&str, u64> = index.ids.iter().map(String::as_str).zip(index.omega1.iter().copied()).collect();
        let ids = index.distinct_ids(config.limit);
        let omega1 = ids.iter().map(|id| lookup[id.as_str()] as f64).collect();
        let mut spectra = Vec::new();
        for id in &ids {
            match store.spectrum(n, id)? {
                Some(r) => spectra.push(r),
                None => break,
            }
        }
        let spectra = if spectra.len() == ids.len() {
            let bad = spectra.iter().filter(|r| r.status != SpectrumStatus::Ok).count();
            if bad > 0 {
                notes.push(format!("N={n}: {bad} of {} spectra have no usable fit and are left out", ids.len()));
            }
            Some(spectra)
        } else {
            if !spectra.is_empty() {
                notes.push(format!("N={n}: spectra incomplete ({} of {})", spectra.len(), ids.len()));
            }
            None
        };
        let mut sa = Vec::new();
        for id in &ids {
            match store.sa(n, id)? {
                Some(r) => sa.push(r),
                None => break,
            }
        }
        let sa = if sa.len() == ids.len() {
            Some(sa)
        } else {
            if !sa.is_empty() {
                notes.push(format!("N={n}: annealing records incomplete ({} of {})", sa.len(), ids.len()));
            }
            None
        };
        out.push(SizeData { n, index, omega1, ids, spectra, sa });
    }
    Ok(out)
}

/// Ties around a quantile give it a zero order-statistics error; such points
/// get this relative error instead.
const MIN_REL_ERROR: f64 = 1e-3;

fn quantile_table(quantity: &str, samples: &[(usize, Vec<f64>)], config: &RunConfig) -> QuantileTable {
    let qs: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let mut rows = Vec::new();
    for (n, v) in samples {
        if v.is_empty() {
            continue;
        }
        let (median, median_err) = quantile_with_error(v, 0.5).expect("non-empty");
        let (d, e): (Vec<f64>, Vec<f64>) = qs.iter().map(|&q| quantile_with_error(v, q).expect("non-empty")).unzip();
        rows.push(QuantileRow { n: *n, count: v.len(), median, median_err, deciles: d, decile_errs: e });
    }
    let fit = |value: &dyn Fn(&QuantileRow) -> (f64, f64)| -> Fitted<RateFit> {
        let points: Vec<RatePoint> = rows
            .iter()
            .map(|r| {
                let (value, error) = value(r);
                RatePoint { n: r.n, value, error: error.max(MIN_REL_ERROR * value.abs()) }
            })
            .collect();
        fit_rate_with(&points, config.report.n_min, config.report.weighting).into()
    };
    let median_rate = fit(&|r| (r.median, r.median_err));
    let decile_rates = (0..9).map(|j| fit(&|r| (r.deciles[j], r.decile_errs[j]))).collect();
    QuantileTable {
        quantity: quantity.into(),
        n_min: config.report.n_min,
        weighting: config.report.weighting,
        rows,
        median_rate,
        decile_rates,
    }
}

fn rate_of(t: &QuantileTable, factor: f64) -> Fitted<Rate> {
    match &t.median_rate {
        Fitted::Ok(f) => Fitted::Ok(Rate { rate: factor * f.rate, rate_err: factor * f.rate_err, chi2_dof: f.chi2_dof }),
        Fitted::Failed { error } => Fitted::Failed { error: error.clone() },
    }
}

fn pdf_row(n: usize, quantity: &str, values: &[f64], bins: usize) -> Option<PdfRow> {
    let (median, _) = quantile_with_error(values, 0.5).ok()?;
    let scaled: Vec<f64> = values.iter().map(|v| v / median).collect();
    let hist = histogram(&scaled, bins).ok()?;
    let weibull = fit_pdf(&hist, PdfFamily::Weibull).into();
    Some(PdfRow { n, quantity: quantity.into(), count: values.len(), median, histogram: hist, weibull })
}

/// Leave-one-group-out jackknife over `groups` interleaved groups.
fn jackknife<F>(len: usize, groups: usize, estimate: F) -> Option<Vec<f64>>
where
    F: Fn(&[usize]) -> Option<Vec<f64>>,
{
    let g = groups.min(len);
    if g < 2 {
        return None;
    }
    let reps: Vec<Vec<f64>> = (0..g)
        .map(|k| estimate(&(0..len).filter(|i| i % g != k).collect::<Vec<_>>()))
        .collect::<Option<_>>()?;
    let dim = reps[0].len();
    let errs = (0..dim)
        .map(|j| {
            let mean = reps.iter().map(|r| r[j]).sum::<f64>() / g as f64;
            let var = reps.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>();
            (var * (g - 1) as f64 / g as f64).sqrt()
        })
        .collect();
    Some(errs)
}

fn pearson_log(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

const JACKKNIFE_GROUPS: usize = 10;
const SLOPE_GRID: usize = 50;

fn qa_slope(tau: &[f64], xi: &[f64], ns: Vec<usize>) -> QaSlope {
    let fit = log_slope(tau, xi);
    let mut out = QaSlope {
        ns,
        fit: Fitted::Failed { error: String::new() },
        curve: Vec::new(),
        min_slope: f64::NAN,
        hardest_quintile_xi: f64::NAN,
        hardest_quintile_slope: [f64::NAN; 2],
    };
    let fit = match fit {
        Ok(f) => f,
        Err(e) => {
            out.fit = Fitted::Failed { error: e.to_string() };
            return out;
        }
    };
    let [lo, hi] = fit.ln_xi_range;
    let grid: Vec<f64> = (0..SLOPE_GRID).map(|i| lo + (hi - lo) * i as f64 / (SLOPE_GRID - 1) as f64).collect();
    let pick = |idx: &[usize]| -> Option<Vec<f64>> {
        let t: Vec<f64> = idx.iter().map(|&i| tau[i]).collect();
        let x: Vec<f64> = idx.iter().map(|&i| xi[i]).collect();
        let f = log_slope(&t, &x).ok()?;
        // Slopes are compared on the full-sample grid.
        let mut v = f.coeffs.to_vec();
        v.extend(grid.iter().map(|&g| f.slope(g)));
        Some(v)
    };
    let errs = jackknife(tau.len(), JACKKNIFE_GROUPS, pick).unwrap_or_else(|| vec![f64::NAN; 4 + SLOPE_GRID]);
    let rss: f64 = tau
        .iter()
        .zip(xi)
        .map(|(t, x)| {
            let u = x.ln() - fit.center;
            let c = &fit.coeffs;
            (t.ln() - (c[0] + u * (c[1] + u * (c[2] + u * c[3])))).powi(2)
        })
        .sum();
    out.curve = grid
        .iter()
        .zip(&errs[4..])
        .map(|(&g, &e)| SlopePoint { xi: g.exp(), s_qa: fit.slope(g), s_qa_err: e })
        .collect();
    out.min_slope = out.curve.iter().map(|p| p.s_qa).fold(f64::INFINITY, f64::min);
    let q80 = hardsat_core::stats::quantile(xi, 0.8).unwrap_or(f64::NAN);
    out.hardest_quintile_xi = q80;
    let hard: Vec<f64> = xi.iter().filter(|&&x| x >= q80).map(|&x| fit.slope_at_xi(x)).collect();
    out.hardest_quintile_slope = [
        hard.iter().cloned().fold(f64::INFINITY, f64::min),
        hard.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    ];
    out.fit = Fitted::Ok(SlopeFit {
        coeff_errs: [errs[0], errs[1], errs[2], errs[3]],
        chi2_dof: rss / (tau.len() - 4) as f64,
        count: tau.len(),
        fit,
    });
    out
}

fn sa_dos_row(n: usize, tau: &[f64], omega1: &[f64]) -> Fitted<SaDosRow> {
    let f = match sa_dos_fit(tau, omega1) {
        Ok(f) => f,
        Err(e) => return Fitted::Failed { error: e.to_string() },
    };
    let err = jackknife(tau.len(), JACKKNIFE_GROUPS, |idx| {
        let t: Vec<f64> = idx.iter().map(|&i| tau[i]).collect();
        let o: Vec<f64> = idx.iter().map(|&i| omega1[i]).collect();
        sa_dos_fit(&t, &o).ok().map(|f| vec![f.delta_alpha])
    })
    .map_or(f64::NAN, |e| e[0]);
    let pred = |o: f64| f.amplitude.ln() + (1.0 + f.delta_alpha) * o.ln();
    let rss: f64 = tau.iter().zip(omega1).map(|(t, o)| (t.ln() - pred(*o)).powi(2)).sum();
    Fitted::Ok(SaDosRow {
        n,
        count: tau.len(),
        amplitude: f.amplitude,
        delta_alpha: f.delta_alpha,
        delta_alpha_err: err,
        chi2_dof: rss / (tau.len().max(3) - 2) as f64,
    })
}

fn double_row(n: usize, p_sa: &[f64], xi_lz: &[f64], bins: usize) -> CliResult<DoubleRow> {
    let r_sa = tune_r(p_sa, TuneMode::Success)?;
    let r_qa = tune_r(xi_lz, TuneMode::XiLz)?;
    let a: Vec<f64> = p_sa.iter().map(|&p| repeat_success(p, r_sa)).collect();
    let b: Vec<f64> = xi_lz.iter().map(|&x| lz_success(x, r_qa)).collect();
    Ok(DoubleRow { n, count: p_sa.len(), r_sa, r_qa, histogram: double_histogram(&a, &b, bins)? })
}

fn fold_row(n: usize, xi_lz: &[f64], config: &RunConfig) -> CliResult<FoldRow> {
    let fit = fit_pdf(&histogram(xi_lz, config.report.bins)?, PdfFamily::Weibull)?;
    let r = tune_r(xi_lz, TuneMode::XiLz)?;
    let grid = logit_grid(config.report.fold_points, DEFAULT_EPS);
    let pdf = fold_success_pdf(&XiDensity::Parametric(fit.clone()), r, &grid)?;
    let p: Vec<f64> = xi_lz.iter().map(|&x| lz_success(x, r)).collect();
    Ok(FoldRow {
        n,
        count: xi_lz.len(),
        xi_lz_fit: fit,
        r,
        integral: pdf.integral(),
        mean: pdf.mean(),
        maxima: local_maxima(&pdf.density).into_iter().map(|i| pdf.grid[i]).collect(),
        grid: pdf.grid,
        density: pdf.density,
        empirical: histogram_range(&p, config.report.bins, 0.0, 1.0)?,
    })
}

/// Builds every artifact whose inputs are present. Artifacts needing a
/// missing stage are listed in `refused`.
pub fn build(config: &RunConfig, store: &ResultsStore) -> CliResult<Report> {
    config.validate()?;
    let mut report = Report::default();
    let data = load(config, store, &mut report.notes)?;
    if data.is_empty() {
        return Err(CliError::Dependency {
            stage: "generate",
            detail: "the report needs at least one ensemble; run `hardsat generate` first".into(),
        });
    }
    let refuse = |report: &mut Report, artifact: &str, stage: &str| {
        report.refused.push(Refusal { artifact: artifact.into(), stage: stage.into() });
    };

    let omega: Vec<(usize, Vec<f64>)> =
        data.iter().map(|d| (d.n, d.index.omega1.iter().map(|&o| o as f64).collect())).collect();
    report.table1 = Some(quantile_table("omega1", &omega, config));

    let with_spectra: Vec<&SizeData> = data.iter().filter(|d| d.spectra.is_some()).collect();
    let with_sa: Vec<&SizeData> = data.iter().filter(|d| d.sa.is_some()).collect();

    if with_sa.is_empty() {
        for a in ["table3", "fig6", "fig7"] {
            refuse(&mut report, a, "sa");
        }
    } else {
        let tau: Vec<(usize, Vec<f64>)> =
            with_sa.iter().map(|d| (d.n, d.sa.iter().flatten().map(|r| r.tau_sa).collect())).collect();
        report.table3 = Some(quantile_table("tau_sa", &tau, config));
        report.fig6 = Some(SaDos {
            rows: with_sa
                .iter()
                .map(|d| {
                    let t: Vec<f64> = d.sa.iter().flatten().map(|r| r.tau_sa).collect();
                    sa_dos_row(d.n, &t, &d.omega1)
                })
                .collect(),
        });
    }

    if with_spectra.is_empty() {
        for a in ["table2", "table4", "fig4", "fig5", "fig8"] {
            refuse(&mut report, a, "spectrum");
        }
        if !with_sa.is_empty() {
            refuse(&mut report, "fig7", "spectrum");
        }
        return Ok(report);
    }

    let qa: Vec<(usize, Vec<(usize, f64, f64, f64)>)> = with_spectra.iter().map(|d| (d.n, d.qa())).collect();
    let col = |k: usize| -> Vec<(usize, Vec<f64>)> {
        qa.iter()
            .map(|(n, rows)| (*n, rows.iter().map(|r| [r.1, r.2, r.3][k]).collect()))
            .collect()
    };
    let xi_gap = quantile_table("xi_gap", &col(0), config);
    let xi_lz = quantile_table("xi_lz", &col(1), config);
    report.table4 = Some(GapRates {
        r_gap: rate_of(&xi_gap, 1.0),
        r_lz: rate_of(&xi_lz, 1.0),
        r_qa: rate_of(&xi_lz, 2.0),
        xi_gap,
        xi_lz,
    });

    let mut pdf_rows = Vec::new();
    for (n, rows) in &qa {
        for (k, name) in [(0, "xi_gap"), (1, "xi_lz")] {
            let v: Vec<f64> = rows.iter().map(|r| [r.1, r.2][k]).collect();
            match pdf_row(*n, name, &v, config.report.bins) {
                Some(row) => pdf_rows.push(row),
                None => report.notes.push(format!("N={n}: no {name} histogram")),
            }
        }
    }
    report.table2 = Some(PdfTable { rows: pdf_rows });

    report.fig4 = Some(
        with_spectra
            .iter()
            .zip(&qa)
            .filter(|(_, (_, rows))| rows.len() >= 3)
            .map(|(d, (n, rows))| {
                let om: Vec<f64> = rows.iter().map(|r| d.omega1[r.0]).collect();
                let xi: Vec<f64> = rows.iter().map(|r| r.1).collect();
                Correlation { n: *n, count: rows.len(), log_correlation: pearson_log(&om, &xi) }
            })
            .collect(),
    );

    let tau: Vec<f64> = qa.iter().flat_map(|(_, r)| r.iter().map(|r| r.3)).collect();
    let xi: Vec<f64> = qa.iter().flat_map(|(_, r)| r.iter().map(|r| r.1)).collect();
    report.fig5 = Some(qa_slope(&tau, &xi, qa.iter().map(|(n, _)| *n).collect()));

    report.fig8 = Some(
        qa.iter()
            .map(|(n, rows)| fold_row(*n, &rows.iter().map(|r| r.2).collect::<Vec<_>>(), config).into())
            .collect(),
    );

    if !with_sa.is_empty() {
        let both: Vec<&SizeData> = data.iter().filter(|d| d.sa.is_some() && d.spectra.is_some()).collect();
        if both.is_empty() {
            report.notes.push("fig7: no N has both spectra and annealing records".into());
        }
        report.fig7 = Some(
            both.iter()
                .map(|d| {
                    let rows = d.qa();
                    let sa = d.sa.as_ref().expect("filtered");
                    let p: Vec<f64> = rows.iter().map(|r| sa[r.0].p_success).collect();
                    let x: Vec<f64> = rows.iter().map(|r| r.2).collect();
                    double_row(d.n, &p, &x, config.report.double_bins).into()
                })
                .collect(),
        );
    }
    Ok(report)
}

fn f(x: f64) -> String {
    format!("{x}")
}

struct Tsv(String);

impl Tsv {
    fn new(header: &[&str]) -> Self {
        Tsv(header.join("\t") + "\n")
    }

    fn row(&mut self, cells: Vec<String>) {
        self.0.push_str(&cells.join("\t"));
        self.0.push('\n');
    }
}

fn quantile_tsv(t: &QuantileTable) -> Tsv {
    let mut header = vec!["n", "count", "median", "median_err"];
    let names: Vec<String> = (1..10).map(|i| format!("d{i}")).collect();
    header.extend(names.iter().map(String::as_str));
    let mut tsv = Tsv::new(&header);
    for r in &t.rows {
        let mut cells = vec![r.n.to_string(), r.count.to_string(), f(r.median), f(r.median_err)];
        cells.extend(r.deciles.iter().map(|&d| f(d)));
        tsv.row(cells);
    }
    tsv
}

/// Writes `stats/<artifact>.json` and `.tsv` files for `report`, plus
/// per-instance tables, and removes artifacts that were refused.
pub fn write(report: &Report, config: &RunConfig, store: &ResultsStore) -> CliResult<()> {
    let dir = store.stats_dir();
    let put_json = |name: &str, v: &dyn erased::Json| store.write_bytes(&dir.join(format!("{name}.json")), &v.bytes());
    let put_tsv = |name: &str, t: Tsv| store.write_bytes(&dir.join(format!("{name}.tsv")), t.0.as_bytes());
    for r in &report.refused {
        let files = match r.artifact.as_str() {
            "table2" => vec!["table2", "fig9"],
            "table3" => vec!["table3", "fig10"],
            "table4" => vec!["table4", "fig11"],
            other => vec![other],
        };
        for a in files {
            for ext in ["json", "tsv"] {
                let _ = std::fs::remove_file(dir.join(format!("{a}.{ext}")));
            }
        }
    }
    put_json("report", report)?;

    if let Some(t) = &report.table1 {
        put_json("table1", t)?;
        put_tsv("fig1", quantile_tsv(t))?;
    }
    if let Some(t) = &report.table3 {
        put_json("table3", t)?;
        put_tsv("fig10", quantile_tsv(t))?;
    }
    if let Some(t) = &report.table4 {
        put_json("table4", t)?;
        let mut tsv = Tsv::new(&["quantity", "n", "count", "median", "median_err", "d1", "d5", "d9"]);
        for q in [&t.xi_gap, &t.xi_lz] {
            for r in &q.rows {
                tsv.row(vec![
                    q.quantity.clone(),
                    r.n.to_string(),
                    r.count.to_string(),
                    f(r.median),
                    f(r.median_err),
                    f(r.deciles[0]),
                    f(r.deciles[4]),
                    f(r.deciles[8]),
                ]);
            }
        }
        put_tsv("fig11", tsv)?;
    }
    if let Some(t) = &report.table2 {
        put_json("table2", t)?;
        let mut tsv = Tsv::new(&["quantity", "n", "x", "count", "error", "weibull"]);
        for row in &t.rows {
            let h = &row.histogram;
            for (j, c) in h.centers().iter().enumerate() {
                let model = row.weibull.ok().map_or(f64::NAN, |w| {
                    let (a, b) = (h.edges[j], h.edges[j + 1]);
                    w.amplitude * w.x0 / w.k * PdfFamily::Weibull.mass(w.k, w.x0, a, b) / (b - a)
                });
                tsv.row(vec![row.quantity.clone(), row.n.to_string(), f(*c), h.counts[j].to_string(), f(h.errors[j]), f(model)]);
            }
        }
        put_tsv("fig9", tsv)?;
    }
    if let Some(c) = &report.fig4 {
        put_json("fig4", c)?;
    }
    if let Some(s) = &report.fig5 {
        put_json("fig5", s)?;
        let mut tsv = Tsv::new(&["xi_gap", "s_qa", "s_qa_err"]);
        for p in &s.curve {
            tsv.row(vec![f(p.xi), f(p.s_qa), f(p.s_qa_err)]);
        }
        put_tsv("fig5", tsv)?;
    }
    if let Some(s) = &report.fig6 {
        put_json("fig6", s)?;
    }
    if let Some(rows) = &report.fig7 {
        put_json("fig7", rows)?;
        let mut tsv = Tsv::new(&["n", "sa_bin", "qa_bin", "value"]);
        for row in rows.iter().filter_map(Fitted::ok) {
            for (i, line) in row.histogram.values.iter().enumerate() {
                for (j, v) in line.iter().enumerate() {
                    tsv.row(vec![row.n.to_string(), i.to_string(), j.to_string(), f(*v)]);
                }
            }
        }
        put_tsv("fig7", tsv)?;
    }
    if let Some(rows) = &report.fig8 {
        put_json("fig8", rows)?;
        let mut tsv = Tsv::new(&["n", "p", "density"]);
        for row in rows.iter().filter_map(Fitted::ok) {
            for (p, d) in row.grid.iter().zip(&row.density) {
                tsv.row(vec![row.n.to_string(), f(*p), f(*d)]);
            }
        }
        put_tsv("fig8", tsv)?;
    }
    instance_tables(config, store)
}

/// Per-instance tables behind the scatter plots of Figs. 4 to 6.
fn instance_tables(config: &RunConfig, store: &ResultsStore) -> CliResult<()> {
    let mut notes = Vec::new();
    let data = load(config, store, &mut notes)?;
    let dir = store.stats_dir();
    let mut qa = Tsv::new(&["n", "instance", "omega1", "xi_gap", "xi_lz", "tau_qa", "lambda_c", "slope"]);
    let mut sa = Tsv::new(&["n", "instance", "omega1", "p_success", "std_err", "tau_sa"]);
    let (mut any_qa, mut any_sa) = (false, false);
    for d in &data {
        if let Some(spectra) = &d.spectra {
            any_qa = true;
            for (i, r) in spectra.iter().enumerate() {
                if let (Some(q), Some(fit)) = (r.qa, &r.fit) {
                    qa.row(vec![
                        d.n.to_string(),
                        d.ids[i].clone(),
                        f(d.omega1[i]),
                        f(q.xi_gap),
                        f(q.xi_lz),
                        f(q.tau_qa),
                        f(fit.lambda_c),
                        f(fit.slope),
                    ]);
                }
            }
        }
        if let Some(records) = &d.sa {
            any_sa = true;
            for (i, r) in records.iter().enumerate() {
                sa.row(vec![d.n.to_string(), d.ids[i].clone(), f(d.omega1[i]), f(r.p_success), f(r.std_err), f(r.tau_sa)]);
            }
        }
    }
    if any_qa {
        store.write_bytes(&dir.join("fig4.tsv"), qa.0.as_bytes())?;
    }
    if any_sa {
        store.write_bytes(&dir.join("fig6.tsv"), sa.0.as_bytes())?;
    }
    Ok(())
}

mod erased {
    pub trait Json {
        fn bytes(&self) -> Vec<u8>;
    }

    impl<T: serde::Serialize> Json for T {
        fn bytes(&self) -> Vec<u8> {
            crate::store::to_json_bytes(self)
        }
    }
}

/// Builds and writes the report.
pub fn run(config: &RunConfig, store: &ResultsStore) -> CliResult<Report> {
    let report = build(config, store)?;
    write(&report, config, store)?;
    Ok(report)
}

/// The dependency error for the artifacts a report had to refuse.
pub fn refusal_error(report: &Report) -> Option<CliError> {
    let first = report.refused.first()?;
    let stage = if first.stage == "sa" { "sa" } else { "spectrum" };
    let mut stages: Vec<&str> = report.refused.iter().map(|r| r.stage.as_str()).collect();
    stages.dedup();
    let names: Vec<&str> = report.refused.iter().map(|r| r.artifact.as_str()).collect();
    Some(CliError::Dependency {
        stage,
        detail: format!("{} not produced; run `hardsat {}` first", names.join(", "), stages.join("` and `hardsat ")),
    })
}
