use crate::error::{Error, Result};
use crate::scalar::{log_add_exp, Scalar};

use super::{check_log_lambda, log_of_threshold, Detector};

/// Generalized Shiryaev-Roberts statistic `R_n = (1 + R_{n-1}) Lambda_n`, `R_0 = head_start`.
#[derive(Debug, Clone)]
pub struct GsrDetector<F = f64> {
    head_start: F,
    log_threshold: F,
    log_statistic: F,
    step_index: usize,
}

impl<F: Scalar> GsrDetector<F> {
    pub fn new(head_start: F, threshold: F) -> Result<Self> {
        Self::with_log_threshold(head_start, log_of_threshold(threshold)?)
    }

    pub fn with_log_threshold(head_start: F, log_threshold: F) -> Result<Self> {
        if !(head_start >= F::zero() && head_start.is_finite()) {
            return Err(Error::Argument(format!("head start {head_start} must be finite and >= 0")));
        }
        if log_threshold.is_nan() {
            return Err(Error::Argument("log threshold is NaN".into()));
        }
        Ok(Self {
            head_start,
            log_threshold,
            log_statistic: head_start.ln(),
            step_index: 0,
        })
    }

    pub fn head_start(&self) -> F {
        self.head_start
    }

    pub fn statistic(&self) -> F {
        self.log_statistic.exp()
    }
}

impl<F: Scalar> Detector<F> for GsrDetector<F> {
    fn step(&mut self, log_lambda: F) -> Result<()> {
        let n = self.step_index + 1;
        check_log_lambda(log_lambda, n)?;
        self.log_statistic = log_add_exp(self.log_statistic, F::zero()) + log_lambda;
        self.step_index = n;
        Ok(())
    }

    fn log_statistic(&self) -> F {
        self.log_statistic
    }

    fn log_threshold(&self) -> F {
        self.log_threshold
    }

    fn step_index(&self) -> usize {
        self.step_index
    }
}

/// `B = (mean_nu - 1 + head_start) / alpha`.
pub fn gsr_threshold<F: Scalar>(alpha: F, prior_mean: F, head_start: F) -> Result<F> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::Argument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !prior_mean.is_finite() {
        return Err(Error::Argument("GSR threshold needs a finite prior mean".into()));
    }
    let num = prior_mean - F::one() + head_start;
    if !(num > F::zero()) {
        return Err(Error::Argument(format!(
            "mean_nu - 1 + head_start = {num} must be positive"
        )));
    }
    Ok(num / alpha)
}
