use crate::error::{Error, Result};
use crate::estimate::{Accumulator, McEstimate};
use crate::hmm::{PathSampler, RegimePair};
use crate::likelihood::LlrTracker;
use crate::rng::{derive_seed, par_replicate, substream, tags};
use crate::scalar::{log_add_exp, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaOptions<F = f64> {
    /// Initial statistic `R_0`.
    pub r0: F,
    pub tail_tol: F,
    pub run_length: usize,
    pub max_terms: usize,
}

impl<F: Scalar> Default for EtaOptions<F> {
    fn default() -> Self {
        Self { r0: F::zero(), tail_tol: F::lit(1e-12), run_length: 10, max_terms: 1_000_000 }
    }
}

/// Limit of the slowly changing term
/// `log(1 + R_0 + sum_k (1 - rho)^k exp(-S_k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaConstant<F = f64> {
    pub value: McEstimate<F>,
    /// Largest number of series terms used by any replication.
    pub truncation_k: usize,
    /// Largest geometric bound on the discarded tail over replications.
    pub tail_bound: F,
    pub r0: F,
}

pub fn estimate_eta_constant<F: Scalar>(
    pair: &RegimePair<F>,
    rho: F,
    reps: usize,
    options: &EtaOptions<F>,
    seed: u64,
) -> Result<EtaConstant<F>> {
    if !(rho >= F::zero() && rho < F::one()) {
        return Err(Error::Argument(format!("rho = {rho} must lie in [0, 1)")));
    }
    if !(options.r0 >= F::zero()) || !options.r0.is_finite() {
        return Err(Error::Argument(format!("R_0 = {} must be finite and nonnegative", options.r0)));
    }
    if !(options.tail_tol > F::zero()) || options.run_length == 0 || reps < 2 {
        return Err(Error::Argument("tail_tol, run_length and reps must be positive".into()));
    }
    let log_decay = (-rho).ln_1p();
    let log_tol = options.tail_tol.ln();
    let log_head = options.r0.ln_1p();
    let master = derive_seed(seed, tags::ETA);
    let runs = par_replicate(reps, |i| {
        let mut rng = substream(master, i as u64);
        let mut sampler = PathSampler::new(pair, Some(1));
        let (_, y0) = sampler.next(&mut rng);
        let mut tracker = LlrTracker::new(pair, y0)?;
        let mut log_series = F::neg_infinity();
        let mut small = 0;
        let mut k = 0;
        let mut log_term = F::zero();
        while small < options.run_length {
            if k == options.max_terms {
                return Err(Error::Diagnostics(format!(
                    "series did not settle within {} terms; log-likelihood ratio is not trending up",
                    options.max_terms
                )));
            }
            let (_, y) = sampler.next(&mut rng);
            tracker.step(y)?;
            k += 1;
            log_term = F::from_usize_lossy(k) * log_decay - tracker.cumulative();
            log_series = log_add_exp(log_series, log_term);
            if log_term < log_tol {
                small += 1;
            } else {
                small = 0;
            }
        }
        let ratio = (log_decay - tracker.cumulative() / F::from_usize_lossy(k)).exp();
        let bound = if ratio < F::one() {
            log_term.exp() * ratio / (F::one() - ratio)
        } else {
            F::infinity()
        };
        Ok((log_add_exp(log_head, log_series), k, bound))
    })?;
    let mut acc = Accumulator::default();
    let mut truncation_k = 0;
    let mut tail_bound = F::zero();
    for &(v, k, b) in &runs {
        acc.push(v);
        truncation_k = truncation_k.max(k);
        tail_bound = tail_bound.max(b);
    }
    Ok(EtaConstant { value: acc.finish(), truncation_k, tail_bound, r0: options.r0 })
}
