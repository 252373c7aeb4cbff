//! Replicated benchmark experiments for the split sampler and its
//! comparison estimators.
//!
//! [`config`] reads flat `key = value` experiment files, [`run`] executes
//! replicates in parallel with one seeded stream each, [`report`] computes
//! relative RMSE and RMS-of-log summaries and writes CSV or JSON, and
//! [`suite`] holds the deterministic property checks.

pub mod config;
mod error;
pub mod report;
pub mod run;
pub mod suite;

pub use config::{EstimatorKind, ExperimentConfig, ExperimentKind, ModelKind, OutputFormat, RawConfig};
pub use error::{HarnessError, Result};
pub use report::{emit_report, emit_reports, ReplicateRecord, ReplicateReport, Summary, SummaryTable};
pub use run::{run_plan, run_replicates, run_trace};
