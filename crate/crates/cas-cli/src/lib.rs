//! Experiment harness for communication-assisted-sensing waveform design.
//!
//! Wraps the `cas-core` solvers in a reproducible pipeline: a scenario
//! catalogue with canonical defaults ([`config`]), a seeded Monte-Carlo
//! runner sweeping SNR grids ([`run`]), and deterministic CSV/aggregate
//! output ([`report`]).

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentSpec, Scenario, SolverParams};
pub use report::{csv_string, monte_carlo_summary, write_csv, SummaryRow, CSV_HEADER};
pub use run::{run_experiment, ResultRow};
