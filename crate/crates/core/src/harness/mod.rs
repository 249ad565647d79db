//! Experiment configuration, execution and reporting.

mod config;
mod report;
mod run;

pub use config::{
    Algorithm, EnvironmentSpec, ExperimentConfig, MisspecSpec, OracleSpec, OutputSpec, Tuning, SCHEMA_VERSION,
};
pub use report::{compare_report, ComparisonTable, ReportRow};
pub use run::{
    build_environment, build_oracle, effective_horizon, ledger_file_name, run_experiment, run_experiment_in, run_seed,
    BoundMetric, BuiltEnvironment, Quantiles, RunSummary, SeedResult,
};

use crate::error::{Error, Result};

/// Sizes the global worker pool used for seed and trial parallelism.
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::Usage("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))
}
