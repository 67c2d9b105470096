//! Data generation, file formats and the experiment runner.

pub mod compare;
pub mod config;
pub mod data;
pub mod matrix;
pub mod report;
pub mod synthetic;

use gridroll_core::{HorizonError, ModelError, RobustError, SchedulerError};
use thiserror::Error;

pub use config::{Mode, RunConfig};
pub use matrix::{run_matrix, run_matrix_with, MatrixOptions, MatrixOutput};
pub use data::{load_instance, write_instance};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{file}:{line}: {message}")]
    Schema { file: String, line: u64, message: String },
    #[error("{file}: {message}")]
    Data { file: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
