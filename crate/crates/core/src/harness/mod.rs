//! Random problems, experiment runners, bound evaluation and artifacts.

pub mod bounds;
pub mod config;
pub mod experiments;
pub mod generators;
pub mod invariants;
pub mod output;
pub mod problems;

pub use config::{Conditioning, ExperimentConfig, ExperimentKind};
pub use experiments::{run_condition_evolution, run_experiment, run_expm_experiment, run_square_experiment, summarize, TrialRecord};
