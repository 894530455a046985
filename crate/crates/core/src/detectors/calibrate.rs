use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::experiments::{estimate_pfa, ExperimentConfig};
use crate::scalar::Scalar;

const Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<F = f64> {
    pub threshold: F,
    pub pfa: McEstimate<F>,
    /// 95% confidence interval of the achieved false-alarm probability.
    pub ci: (F, F),
    pub iterations: usize,
    /// Conservative analytic threshold for the same level.
    pub analytic_threshold: F,
}

/// Bisection on `log A` until the false-alarm confidence interval contains
/// `alpha`. Every evaluation reuses the seed in `config`, so the estimated
/// curve is monotone in the threshold.
pub fn calibrate_threshold<F: Scalar>(
    alpha: F,
    config: &ExperimentConfig<F>,
    max_iter: usize,
) -> Result<CalibrationResult<F>> {
    if config.pair.is_degenerate() {
        return Err(Error::DegenerateModel(
            "pre and post regimes are identical; the false-alarm probability does not depend on the data".into(),
        ));
    }
    let analytic = config.detector.analytic_threshold(&config.prior, alpha)?;
    let z = F::lit(Z);
    let brackets = |e: &McEstimate<F>| e.lower(z) <= alpha && alpha <= e.upper(z);
    let eval = |log_a: F| estimate_pfa(config, log_a.exp());
    let done = |log_a: F, e: McEstimate<F>, it: usize| CalibrationResult {
        threshold: log_a.exp(),
        ci: (e.lower(z), e.upper(z)),
        pfa: e,
        iterations: it,
        analytic_threshold: analytic,
    };

    let mut hi = analytic.ln();
    let e_hi = eval(hi)?;
    if brackets(&e_hi) {
        return Ok(done(hi, e_hi, 1));
    }
    let mut iterations = 1;
    if e_hi.mean > alpha {
        // the bound is not conservative for this estimate; widen upwards
        while iterations < max_iter {
            iterations += 1;
            hi += F::lit(std::f64::consts::LN_10);
            let e = eval(hi)?;
            if brackets(&e) {
                return Ok(done(hi, e, iterations));
            }
            if e.mean < alpha {
                break;
            }
        }
    }
    let step = F::lit(4.0 * std::f64::consts::LN_10);
    let mut lo = hi - step;
    loop {
        if iterations >= max_iter {
            return Err(Error::Calibration {
                iterations,
                lo: lo.exp().as_f64(),
                hi: hi.exp().as_f64(),
            });
        }
        iterations += 1;
        let e = eval(lo)?;
        if brackets(&e) {
            return Ok(done(lo, e, iterations));
        }
        if e.mean > alpha {
            break;
        }
        hi = lo;
        lo = lo - step;
    }
    while iterations < max_iter {
        iterations += 1;
        let mid = (lo + hi) * F::lit(0.5);
        let e = eval(mid)?;
        if brackets(&e) {
            return Ok(done(mid, e, iterations));
        }
        if e.mean > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration {
        iterations,
        lo: lo.exp().as_f64(),
        hi: hi.exp().as_f64(),
    })
}
