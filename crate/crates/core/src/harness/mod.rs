//! Monte-Carlo sweep over μₙ targets, dictionary sizes and methods, with
//! CSV/JSON output.

mod config;
mod output;
mod run;
mod summary;

use thiserror::Error;

pub use config::{ExperimentConfig, OutputConfig};
pub use output::{
    read_results, write_outputs, write_results, write_summary, Manifest, OutputPaths, RESULTS_HEADER,
};
pub use run::{
    plan, realization_seed, run_experiment, run_experiment_with_workers, CellResult, ExperimentOutput,
    MuCalibration,
};
pub use summary::{aggregate, summarize, MeanStderr, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
