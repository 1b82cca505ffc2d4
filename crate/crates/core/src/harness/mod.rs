//! Batch plumbing: dataset files, experiment grids and rendered reports.

mod experiment;
pub mod io;
mod report;

pub use experiment::{
    child_seed, run_experiment_grid, run_experiment_grid_in, CellSummary, DatasetRecord,
    ExperimentConfig, ExperimentResult, HyperOverrides, JOURNAL_FILE, RESULT_FILE,
};
pub use report::{render, wilson_interval, ReportFormat};
