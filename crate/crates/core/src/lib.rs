//! Hard 2SAT ensembles, their quantum-adiabatic spectra and classical
//! annealing run-times, and the extreme-value statistics built on them.

pub mod ensemble;
pub mod error;
pub mod fit;
pub mod sa;
pub mod sat;
pub mod seed;
pub mod spectrum;
pub mod stats;

pub use error::{Error, Result};
