//! Library surface of the experiment runner, kept separate from the binary
//! so configs, the grid, and report writing are directly testable.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{validate_config, ConfigIssue, ExperimentConfig};
pub use experiment::{run_appendix_experiment, run_experiment, ExperimentReport};
