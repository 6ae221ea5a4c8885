//! Experiment runner for the `neflab-core` solvers: JSON configurations,
//! NEFF field dumps, deterministic JSON reports and the `solve`, `envelope`,
//! `verify` and `sweep` pipelines.

pub mod config;
pub mod error;
pub mod neff;
pub mod pipeline;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use pipeline::{run_envelope, run_solve, run_sweep, run_verify, Outcome, Verb};
pub use report::Report;
