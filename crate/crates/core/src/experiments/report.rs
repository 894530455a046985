use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::OperatingCharacteristic;

pub const REPORT_HEADER: &str = "detector,threshold,pfa_hat,pfa_se,add_hat,add_se,m2_hat,m2_se,reps,censored,seed";

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub detector: String,
    pub threshold: f64,
    pub pfa_hat: f64,
    pub pfa_se: f64,
    pub add_hat: f64,
    pub add_se: f64,
    pub m2_hat: f64,
    pub m2_se: f64,
    pub reps: usize,
    pub censored: usize,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_result<F: Scalar>(r: &OperatingCharacteristic<F>) -> Self {
        let (m2_hat, m2_se) = r
            .moments
            .get(1)
            .map(|m| (m.mean.as_f64(), m.std_error.as_f64()))
            .unwrap_or((f64::NAN, f64::NAN));
        Self {
            detector: r.detector.to_string(),
            threshold: r.threshold.as_f64(),
            pfa_hat: r.pfa.mean.as_f64(),
            pfa_se: r.pfa.std_error.as_f64(),
            add_hat: r.add().mean.as_f64(),
            add_se: r.add().std_error.as_f64(),
            m2_hat,
            m2_se,
            reps: r.reps,
            censored: r.censored,
            seed: r.seed,
        }
    }
}

/// Renders results as CSV, rows in ascending threshold order.
pub fn report_to_string<F: Scalar>(results: &[OperatingCharacteristic<F>]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::Argument("no results to report".into()));
    }
    let mut rows: Vec<ReportRow> = results.iter().map(ReportRow::from_result).collect();
    rows.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Argument(e.to_string()))
}

pub fn emit_report<F: Scalar>(results: &[OperatingCharacteristic<F>], path: impl AsRef<Path>) -> Result<()> {
    let text = report_to_string(results)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != REPORT_HEADER {
        return Err(Error::Argument(format!("unexpected report header `{header}`")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
