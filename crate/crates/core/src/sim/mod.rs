//! Config-driven experiments: frame error rate sweeps, rate regions, profiles and the
//! typicality oracle, with deterministic parallel execution.

mod config;
mod report;
mod run;

use thiserror::Error;

pub use config::{ChannelFile, ExperimentKind, Experiments, InterleaverKind, SimConfig, StageOrder};
pub use report::{emit_csv, parse_csv, wilson, InfeasiblePoint, ReportRow, SimReport, REPORT_HEADER};
pub use run::{
    data_bits, run, run_with_workers, sweep_point, workers_from_env, OracleRow, SimOutput, EARLY_STOP_ERRORS,
    WORKERS_ENV,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("line {line}: cannot parse {what}")]
    Parse { line: usize, what: String },
    #[error(transparent)]
    Scheme(#[from] crate::scheme::SchemeError),
    #[error(transparent)]
    Polar(#[from] crate::polar::PolarError),
    #[error(transparent)]
    Region(#[from] crate::regions::RegionError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
