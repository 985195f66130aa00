//! Experiment harness for the `rayq-core` solvers: seeded multi-trial runs,
//! CSV traces and aggregates, SVG plots, figure reproductions and timing
//! benchmarks. The `rayq` binary is a thin CLI over this crate.

pub mod aggregate;
pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;
pub mod figures;
pub mod plot;
pub mod trace_csv;

pub use config::{ExperimentConfig, ProblemConfig, SolverSpec};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_trials};
pub use figures::{reproduce_figure, Scale};
