//! Radius sweeps, invariant validation and their file formats.

mod config;
mod records;
mod sweep;
mod validate;

pub use config::{CurveEntry, RefMethodName, StudyConfig};
pub use records::{read_csv, write_csv, CSV_HEADER};
pub use sweep::{
    envelope, error_metric, rate_report, run_sweep, ErrorMetric, RateReport, RecordFlag, SweepOutcome, SweepRecord,
    C_EFF_SLACK, MIN_FIT_POINTS, MIN_SLOPE, REFERENCE_BUDGET,
};
pub use validate::{run_validate, Check, ValidationReport};
