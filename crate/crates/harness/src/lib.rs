//! Experiment runner for `wormsim`: the node-total x protocol x seed matrix,
//! CSV results, summaries, and the `wormsim` command line.

pub mod cli;
pub mod matrix;
pub mod summary;

pub use matrix::{
    read_rows, run_cell, run_matrix, run_matrix_with, worker_count, write_rows, Cell, ExperimentMatrix, MatrixError,
    ResultRow,
    WORKERS_ENV,
};
pub use summary::{summarize, RunSeries, Stat, SummaryCell, SummaryTables};
