//! Ensemble statistics: quantiles, exponential rate fits, histograms and
//! extreme-value fits, and the success-probability fold.

mod correlate;
mod fold;
mod histogram;
mod pdf;
mod quantile;
mod rate;

pub use correlate::{double_histogram, log_slope, sa_dos_fit, DoubleHistogram, LogSlope, SaDosFit};
pub use fold::{
    fold_success_pdf, local_maxima, logit_grid, lz_success, lz_xi, repeat_success, trapezoid, tune_r, uniform_grid,
    SuccessPdf, TuneMode, XiDensity, DEFAULT_EPS,
};
pub use histogram::{histogram, histogram_range, Histogram, DEFAULT_BINS};
pub use pdf::{fit_pdf, PdfFamily, PdfFit};
pub use quantile::{deciles, median, quantile, quantile_sorted, quantile_with_error};
pub use rate::{fit_rate, fit_rate_with, RateFit, RatePoint, RateWeighting};
