//! Configuration-driven experiment runner for the gelfand-models toolkit.

// Negated comparisons like `!(x > 0.0)` reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

pub use config::{ExperimentConfig, Task};
pub use runner::{execute, exit_code, run_experiment, sweep, RunError, RunSummary};
