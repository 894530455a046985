//! Monte Carlo harness, exact enumeration oracle, SLLN diagnostics, the
//! worked examples and CSV reporting.

mod config;
pub mod examples;
mod mc;
mod oracle;
mod report;
mod slln;

pub use config::{
    ConfigFile, DetectorSection, EmissionName, ExperimentConfig, ModelSection, PriorSection,
    RegimeSection, RunSection, RunSettings, ThresholdSpec,
};
pub use mc::{
    estimate_add, estimate_add_grid, estimate_pfa, estimate_pfa_grid, estimate_run_length_grid, simulate,
    OperatingCharacteristic,
};
pub use oracle::{enumerate_pre_paths, exact_oracle, ExactOracle};
pub use report::{emit_report, read_report, report_to_string, ReportRow, REPORT_HEADER};
pub use slln::{slln_diagnostic, slln_diagnostic_with, SllnDiagnostic, SllnOptions};

pub use crate::rng::with_threads;
