use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Detector;

/// Source of `log Lambda_1, log Lambda_2, ...`.
pub trait LlrSource<F> {
    fn next_llr(&mut self) -> Result<F>;
}

impl<F, I: Iterator<Item = F>> LlrSource<F> for I {
    fn next_llr(&mut self) -> Result<F> {
        self.next()
            .ok_or_else(|| Error::Argument("likelihood-ratio stream ended before the horizon".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome<F = f64> {
    /// Alarm time, or the horizon when censored.
    pub stop_time: usize,
    pub stopped_log_statistic: F,
    /// `stopped_log_statistic - log_threshold`.
    pub log_overshoot: F,
    pub censored: bool,
}

/// Runs until the first `n >= 1` with statistic at or above the threshold.
pub fn run_detector<F: Scalar, D: Detector<F>, S: LlrSource<F>>(
    detector: &mut D,
    source: &mut S,
    max_horizon: usize,
) -> Result<DetectionOutcome<F>> {
    if max_horizon < 1 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    for _ in 0..max_horizon {
        let g = source.next_llr()?;
        detector.step(g)?;
        if detector.crossed() {
            return Ok(outcome(detector, false));
        }
    }
    Ok(outcome(detector, true))
}

fn outcome<F: Scalar, D: Detector<F>>(detector: &D, censored: bool) -> DetectionOutcome<F> {
    DetectionOutcome {
        stop_time: detector.step_index(),
        stopped_log_statistic: detector.log_statistic(),
        log_overshoot: detector.log_statistic() - detector.log_threshold(),
        censored,
    }
}
