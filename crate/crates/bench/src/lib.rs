//! Experiment driver for the `lpball` solvers.
//!
//! Each experiment reads an [`ExperimentConfig`], generates its instances
//! deterministically from seeds, times the solvers and writes
//! `results.csv`, `summary.json` and `config_echo.json` (plus `trace.csv` for
//! the 2D path and `profile.csv` for the performance profile) under
//! `<out>/<experiment>/`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod output;
pub mod stats;

pub use config::{Experiment, ExperimentConfig, SolverKind};
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, ExperimentOutput, ResultRow, TraceRow};
pub use instance::{gen_instance, gen_instance_with_noise};
