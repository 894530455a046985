//! Shiryaev and generalized Shiryaev-Roberts stopping rules.
//!
//! Both statistics are kept in log form and compared against a log threshold,
//! stopping at the first `n >= 1` with `log R_n >= log A`.

mod calibrate;
mod gsr;
mod run;
mod shiryaev;

pub use calibrate::{calibrate_threshold, CalibrationResult};
pub use gsr::{gsr_threshold, GsrDetector};
pub use run::{run_detector, DetectionOutcome, LlrSource};
pub use shiryaev::{posterior, shiryaev_threshold, ShiryaevDetector};

use crate::error::{Error, Result};
use crate::priors::ChangePointPrior;
use crate::scalar::Scalar;

/// Common interface of the incremental detectors.
pub trait Detector<F: Scalar> {
    /// Feeds `log Lambda_n` for the next step.
    fn step(&mut self, log_lambda: F) -> Result<()>;
    fn log_statistic(&self) -> F;
    fn log_threshold(&self) -> F;
    fn step_index(&self) -> usize;

    fn crossed(&self) -> bool {
        self.log_statistic() >= self.log_threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorKind<F = f64> {
    Shiryaev,
    Gsr { head_start: F },
}

impl<F: Scalar> DetectorKind<F> {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Shiryaev => "shiryaev",
            DetectorKind::Gsr { .. } => "gsr",
        }
    }

    /// Builds a detector with the given log threshold.
    pub fn build(&self, prior: &ChangePointPrior<F>, log_threshold: F) -> Result<AnyDetector<F>> {
        Ok(match self {
            DetectorKind::Shiryaev => AnyDetector::Shiryaev(ShiryaevDetector::with_log_threshold(
                prior.clone(),
                log_threshold,
            )?),
            DetectorKind::Gsr { head_start } => {
                AnyDetector::Gsr(GsrDetector::with_log_threshold(*head_start, log_threshold)?)
            }
        })
    }

    /// Conservative analytic threshold for target false-alarm level `alpha`.
    pub fn analytic_threshold(&self, prior: &ChangePointPrior<F>, alpha: F) -> Result<F> {
        match self {
            DetectorKind::Shiryaev => shiryaev_threshold(alpha, prior.omega0()),
            DetectorKind::Gsr { head_start } => gsr_threshold(alpha, prior.mean()?, *head_start),
        }
    }
}

/// Either detector, chosen at run time.
#[derive(Debug, Clone)]
pub enum AnyDetector<F = f64> {
    Shiryaev(ShiryaevDetector<F>),
    Gsr(GsrDetector<F>),
}

impl<F: Scalar> Detector<F> for AnyDetector<F> {
    fn step(&mut self, log_lambda: F) -> Result<()> {
        match self {
            AnyDetector::Shiryaev(d) => d.step(log_lambda),
            AnyDetector::Gsr(d) => d.step(log_lambda),
        }
    }

    fn log_statistic(&self) -> F {
        match self {
            AnyDetector::Shiryaev(d) => d.log_statistic(),
            AnyDetector::Gsr(d) => d.log_statistic(),
        }
    }

    fn log_threshold(&self) -> F {
        match self {
            AnyDetector::Shiryaev(d) => d.log_threshold(),
            AnyDetector::Gsr(d) => d.log_threshold(),
        }
    }

    fn step_index(&self) -> usize {
        match self {
            AnyDetector::Shiryaev(d) => d.step_index(),
            AnyDetector::Gsr(d) => d.step_index(),
        }
    }
}

pub(crate) fn check_log_lambda<F: Scalar>(log_lambda: F, step: usize) -> Result<()> {
    if log_lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalDomain {
            step,
            observation: f64::NAN,
            message: format!("log likelihood ratio is {log_lambda}"),
        })
    }
}

pub(crate) fn log_of_threshold<F: Scalar>(threshold: F) -> Result<F> {
    if threshold > F::zero() && threshold.is_finite() {
        Ok(threshold.ln())
    } else {
        Err(Error::Argument(format!("threshold {threshold} must be positive and finite")))
    }
}
