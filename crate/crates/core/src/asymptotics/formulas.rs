use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::scalar::Scalar;

use super::PoissonCorrection;

/// `(log A / (K + c))^m`.
pub fn first_order_add<F: Scalar>(kl: F, c: F, log_threshold: F, m: u32) -> Result<F> {
    if !(kl > F::zero()) {
        return Err(Error::DegenerateModel(format!("information number {kl} is not positive")));
    }
    if !(c >= F::zero()) {
        return Err(Error::Argument(format!("tail exponent {c} must be nonnegative")));
    }
    if !(log_threshold > F::zero()) {
        return Err(Error::Argument(format!("log threshold {log_threshold} must be positive")));
    }
    Ok((log_threshold / (kl + c)).powi(m as i32))
}

/// `zeta / A`.
pub fn ho_pfa<F: Scalar>(threshold: F, zeta: &McEstimate<F>) -> McEstimate<F> {
    McEstimate {
        mean: zeta.mean / threshold,
        std_error: zeta.std_error / threshold,
        count: zeta.count,
        censored_count: 0,
    }
}

/// Higher-order delay prediction with its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoAdd<F = f64> {
    pub value: F,
    pub std_error: F,
    /// `log(A / rho)` for Shiryaev, `log B` for GSR.
    pub log_term: F,
    pub eta: F,
    pub mean_overshoot: F,
    pub integral_delta: F,
    pub delta_w: F,
    /// `K + |log(1 - rho)|`, or `K` for GSR.
    pub divisor: F,
    pub delta_included: bool,
}

fn assemble<F: Scalar>(
    log_term: F,
    divisor: McEstimate<F>,
    eta: &McEstimate<F>,
    overshoot: &McEstimate<F>,
    poisson: Option<&PoissonCorrection<F>>,
) -> HoAdd<F> {
    let (int_d, d_w, included) = match poisson {
        Some(p) if p.enabled => (p.integral_term, p.delta_at_w, true),
        _ => (McEstimate { mean: F::zero(), std_error: F::zero(), count: 0, censored_count: 0 }, McEstimate { mean: F::zero(), std_error: F::zero(), count: 0, censored_count: 0 }, false),
    };
    let num = log_term - eta.mean + overshoot.mean - int_d.mean + d_w.mean;
    let div = divisor.mean;
    let value = num / div;
    let var_num = eta.std_error.powi(2) + overshoot.std_error.powi(2) + int_d.std_error.powi(2) + d_w.std_error.powi(2);
    let var = var_num / (div * div) + (num / (div * div)).powi(2) * divisor.std_error.powi(2);
    HoAdd {
        value,
        std_error: var.sqrt(),
        log_term,
        eta: eta.mean,
        mean_overshoot: overshoot.mean,
        integral_delta: int_d.mean,
        delta_w: d_w.mean,
        divisor: div,
        delta_included: included,
    }
}

/// Shiryaev expansion:
/// `(log(A/rho) - C + E kappa - int Delta + Delta(w)) / (K + |log(1 - rho)|)`.
pub fn ho_add_shiryaev<F: Scalar>(
    threshold: F,
    rho: F,
    kl: &McEstimate<F>,
    eta: &McEstimate<F>,
    mean_overshoot: &McEstimate<F>,
    poisson: Option<&PoissonCorrection<F>>,
) -> Result<HoAdd<F>> {
    if !(rho > F::zero() && rho < F::one()) {
        return Err(Error::Argument(format!("rho = {rho} must lie in (0, 1)")));
    }
    if !(kl.mean > F::zero()) {
        return Err(Error::DegenerateModel("information number is not positive".into()));
    }
    let divisor = McEstimate {
        mean: kl.mean - (-rho).ln_1p(),
        ..*kl
    };
    Ok(assemble((threshold / rho).ln(), divisor, eta, mean_overshoot, poisson))
}

/// GSR expansion: `(log B - C~ + E kappa - int Delta + Delta(w)) / K`.
pub fn ho_add_gsr<F: Scalar>(
    threshold: F,
    kl: &McEstimate<F>,
    eta: &McEstimate<F>,
    mean_overshoot: &McEstimate<F>,
    poisson: Option<&PoissonCorrection<F>>,
) -> Result<HoAdd<F>> {
    if !(kl.mean > F::zero()) {
        return Err(Error::DegenerateModel("information number is not positive".into()));
    }
    Ok(assemble(threshold.ln(), *kl, eta, mean_overshoot, poisson))
}
