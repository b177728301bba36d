//! Experiment drivers, file formats and the `vwl` command line for
//! vacant-set studies built on `vacant-core`.

pub mod config;
pub mod experiments;
pub mod io;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, ModelSpec, TimeSpec};
pub use experiments::{ExperimentError, TrialRecord};
pub use io::{IoError, RunManifest};
pub use report::{AggregateReport, ReportRow, Tolerance};
