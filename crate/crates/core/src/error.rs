use alloc::boxed::Box;

use crate::weight::LevelGrid;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("kernel contract violated: {0}")]
    Contract(&'static str),
    #[error("invalid level grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("cumulative weight value {value} outside the attained range (max {max})")]
    OutOfRange { value: f64, max: f64 },
    #[error("empty sample batch")]
    EmptyBatch,
    #[error("degenerate quantile: no recorded value exceeds {0}")]
    DegenerateQuantile(f64),
    #[error("stage {stage} failed: no pilot sample exceeded {level}")]
    StageFailure { stage: usize, level: f64 },
    #[error("all visit masses are zero")]
    NoVisits,
    #[error(
        "level construction stalled after {iterations} iterations at level {}",
        partial.top()
    )]
    LevelConstruction {
        partial: Box<LevelGrid>,
        iterations: u64,
    },
}
