use crate::error::{Error, Result};
use crate::priors::ChangePointPrior;
use crate::scalar::{log_add_exp, Scalar};

use super::{check_log_lambda, log_of_threshold, Detector};

/// Shiryaev statistic `R_n = sum_k omega_{k,n} prod_{i=k..n} Lambda_i`.
///
/// For general priors the numerator `N_n = (N_{n-1} + omega_n) Lambda_n` is
/// propagated and divided by `P(nu > n)` on read. Geometric priors use the
/// closed recursion `R_n = (R_{n-1} + rho) Lambda_n / (1 - rho)`.
#[derive(Debug, Clone)]
pub struct ShiryaevDetector<F = f64> {
    prior: ChangePointPrior<F>,
    log_threshold: F,
    /// `log N_n` (general priors) or `log R_n` (geometric priors).
    log_state: F,
    step_index: usize,
    geometric: Option<(F, F)>,
}

impl<F: Scalar> ShiryaevDetector<F> {
    pub fn new(prior: ChangePointPrior<F>, threshold: F) -> Result<Self> {
        Self::with_log_threshold(prior, log_of_threshold(threshold)?)
    }

    pub fn with_log_threshold(prior: ChangePointPrior<F>, log_threshold: F) -> Result<Self> {
        if log_threshold.is_nan() {
            return Err(Error::Argument("log threshold is NaN".into()));
        }
        let omega0 = prior.omega0();
        if !(omega0 < F::one()) {
            return Err(Error::Argument("the Shiryaev statistic needs omega0 < 1".into()));
        }
        let geometric = prior.geometric_rho().map(|rho| (rho.ln(), (-rho).ln_1p()));
        let log_state = match geometric {
            Some(_) => omega0.ln() - (-omega0).ln_1p(),
            None => omega0.ln(),
        };
        Ok(Self {
            prior,
            log_threshold,
            log_state,
            step_index: 0,
            geometric,
        })
    }

    pub fn prior(&self) -> &ChangePointPrior<F> {
        &self.prior
    }

    /// `log N_n`.
    pub fn log_numerator(&self) -> F {
        match self.geometric {
            Some(_) => self.log_state + self.prior.log_survival(self.step_index),
            None => self.log_state,
        }
    }

    pub fn statistic(&self) -> F {
        self.log_statistic().exp()
    }

    /// `P(nu <= n | F_n) = R_n / (1 + R_n)`.
    pub fn posterior(&self) -> F {
        posterior(self.log_statistic())
    }
}

impl<F: Scalar> Detector<F> for ShiryaevDetector<F> {
    fn step(&mut self, log_lambda: F) -> Result<()> {
        let n = self.step_index + 1;
        check_log_lambda(log_lambda, n)?;
        match self.geometric {
            Some((log_rho, log_1m_rho)) => {
                self.log_state = log_add_exp(self.log_state, log_rho) + log_lambda - log_1m_rho;
            }
            None => {
                if self.prior.log_survival(n) == F::neg_infinity() {
                    return Err(Error::ExhaustedPrior { n });
                }
                self.log_state = log_add_exp(self.log_state, self.prior.log_pmf(n)) + log_lambda;
            }
        }
        self.step_index = n;
        Ok(())
    }

    fn log_statistic(&self) -> F {
        match self.geometric {
            Some(_) => self.log_state,
            None => self.log_state - self.prior.log_survival(self.step_index),
        }
    }

    fn log_threshold(&self) -> F {
        self.log_threshold
    }

    fn step_index(&self) -> usize {
        self.step_index
    }
}

/// `R / (1 + R)` from `log R`.
pub fn posterior<F: Scalar>(log_r: F) -> F {
    if log_r == F::neg_infinity() {
        return F::zero();
    }
    F::one() / (F::one() + (-log_r).exp())
}

/// `A = (1 - alpha) / alpha`; requires `0 < alpha < 1 - omega0`.
pub fn shiryaev_threshold<F: Scalar>(alpha: F, omega0: F) -> Result<F> {
    if !(alpha > F::zero()) {
        return Err(Error::Argument(format!("alpha = {alpha} must be positive")));
    }
    let limit = F::one() - omega0;
    if alpha >= limit {
        return Err(Error::TrivialSolution {
            alpha: alpha.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok((F::one() - alpha) / alpha)
}
