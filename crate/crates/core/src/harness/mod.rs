//! Experiment orchestration: configuration, dataset generation, the detector
//! sweep over confounding levels, result tables and summaries.

pub mod acceptance;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod results;

pub use acceptance::run_acceptance;
pub use config::{parse_detectors, parse_mean_ranges, Detector, ExperimentConfig};
pub use pipeline::{cmd_generate, cmd_run, rank_dataset, run_in_memory, CellInput, Detection};
pub use report::{cmd_report, CheckOutcome, ReportOutput};
pub use results::{AuscRow, CurveRow, ResultsTable};
