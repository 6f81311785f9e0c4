use thiserror::Error;

use crate::ensemble::{HardEnsemble, MucaWeights};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed instance or mismatched dimensions.
    #[error("structural error: {0}")]
    Structural(String),

    /// Exhaustive enumeration requested above the configured variable cap.
    #[error("capacity error: n = {n} exceeds enumeration cap {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    Solver {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("fit failed: {reason}")]
    Fit {
        reason: String,
        /// Parameter vectors visited by the optimizer, last one first.
        trace: Vec<Vec<f64>>,
    },

    #[error("weight learning did not converge within {steps} steps (mod factor {mod_factor})")]
    WeightsNotConverged {
        steps: u64,
        mod_factor: f64,
        partial: Box<MucaWeights>,
    },

    #[error("harvest budget exhausted: {harvested} of {requested} instances after {steps} steps")]
    PartialEnsemble {
        requested: usize,
        harvested: usize,
        steps: u64,
        partial: Box<HardEnsemble>,
    },
}

impl Error {
    pub(crate) fn fit(reason: impl Into<String>) -> Self {
        Error::Fit {
            reason: reason.into(),
            trace: Vec::new(),
        }
    }
}
