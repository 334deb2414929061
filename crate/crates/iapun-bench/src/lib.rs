//! Benchmark harness around the `iapun` solvers: experiment configs,
//! deterministic run records with CSV/JSON encodings, and oracle-count
//! scaling fits. The binary in this crate exposes the same machinery as a
//! command line; everything here is ordinary library surface so tests and
//! other tools can drive experiments in-process.

pub mod config;
pub mod experiment;
pub mod records;

pub use config::{ExperimentConfig, InstanceConfig, OutputFormat, SolverConfig, SCHEMA_VERSION};
pub use experiment::{probe_gradients, run_experiment, slope_fit, write_records};
pub use records::{
    csv_without_wall_time, read_csv, read_json, rows_from_epochs, rows_from_segments, write_csv,
    write_json, EpochRow, RunRecord, CSV_HEADER,
};

/// Everything that can go wrong in the harness, split by whose fault it is:
/// `Config` and `Parse` are caller input, the rest wrap the layers below.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("record parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Lib(#[from] iapun::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
