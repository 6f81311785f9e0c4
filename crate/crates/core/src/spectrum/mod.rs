//! Low-lying spectrum of the interpolated Hamiltonian and the quantum
//! run-time quantifiers derived from it.

mod hamiltonian;
mod lanczos;
mod lz;
mod scan;

pub use hamiltonian::{apply_hqac, Hqac, QacFamily, SymmetricOperator, SPECTRUM_CAP};
pub use lanczos::{low_levels, lowest_eigenpairs, lowest_two, Eigenpairs, LanczosOptions, LowLevels, DEFAULT_TOL};
pub use lz::{fit_lz, fit_lz_with, lz_gap, qa_from, qa_metrics, LzFit, LzFitOptions, QaMetrics};
pub use scan::{count_local_minima, scan_family, scan_gap, scan_with, GapProfile, ScanPolicy};
