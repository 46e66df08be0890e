//! Monte-Carlo experiment harness for the channel estimators.
//!
//! An [`ExperimentSpec`] names a scenario, a grid of system configurations,
//! the methods to compare and a trial count. [`run_experiment`] produces one
//! [`ResultRow`] per (grid point, method, trial), or per estimator iteration
//! for the per-iteration scenarios; [`summarize`] aggregates them and
//! [`emit`] writes CSV tables and SVG charts.

pub mod emit;
pub mod run;
pub mod spec;
pub mod summary;

use thiserror::Error;

pub use emit::{emit, read_rows_csv, render_svg, rows_to_csv_string, write_rows_csv, OutputFormat};
pub use run::{cell_seed, run_cell, run_experiment, ResultRow, RESULT_COLUMNS};
pub use spec::{ExperimentSpec, GridPoint, Method, Scenario};
pub use summary::{any_cell_failed, summarize, Stats, SummaryRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
