//! Experiment harness around `tcomp-core`: synthetic data, validation sweeps
//! over the regularization weight, evaluation and timing.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod split;
pub mod stats;

pub use config::{AlphaPolicy, ExperimentConfig, GaugeKind};
pub use error::{CliError, CliResult};
pub use split::SplitAssignment;
