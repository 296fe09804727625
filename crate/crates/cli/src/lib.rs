//! Configuration-driven experiment runner for the Steklov toolkit.
//!
//! The binary reads one JSON config describing a boundary curve, solver
//! settings, and an experiment, runs it, and writes deterministic result
//! files plus a run report with named pass/fail checks. All logic lives in
//! this library so the config language and the report format are testable
//! without spawning the binary.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_config, Experiment, ExperimentConfig, SchemaError, Violation};
pub use report::{CheckResult, RunReport, Warning};
pub use runner::{execute, RunOutput};
