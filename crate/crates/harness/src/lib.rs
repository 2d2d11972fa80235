//! Experiment orchestration for the `knorm` command-line tool.

pub mod config;
pub mod experiment;

pub use config::ExperimentConfig;
pub use experiment::{
    compare_to_theory, rows_to_csv, run_experiment, write_results, MechanismTrend, ResultRow,
    TrendReport,
};
