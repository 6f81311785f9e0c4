//! Pipeline driver: configuration, a content-addressed results store, the
//! generate / spectrum / sa stages and the report builder.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod stages;
pub mod store;

pub use config::{NRange, ReportOptions, RunConfig};
pub use error::{CliError, CliResult};
pub use store::ResultsStore;
