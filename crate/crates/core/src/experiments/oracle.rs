use crate::detectors::{AnyDetector, Detector};
use crate::error::{Error, Result};
use crate::hmm::{EmissionKind, HmmSpec};
use crate::likelihood::LlrTracker;
use crate::scalar::Scalar;

use super::ExperimentConfig;

const MAX_TERMS: f64 = 1e6;

/// Exact small-horizon false-alarm characteristics for Bernoulli emissions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOracle<F = f64> {
    pub horizon: usize,
    pub threshold: F,
    /// `P_inf(T = n)` for `n = 1..=horizon` (index `n - 1`).
    pub stop_probabilities: Vec<F>,
    /// `P_inf(T > horizon)`.
    pub p_censored: F,
    /// `P_inf(T < k)` for `k = 1..=horizon + 1` (index `k - 1`).
    pub p_false_before: Vec<F>,
    /// `sum_n P(T = n) P(nu > n) + P(T > H) P(nu > H)`, the quantity the Monte
    /// Carlo estimator targets with the same horizon.
    pub pfa: F,
}

fn require_bernoulli<F: Scalar>(spec: &HmmSpec<F>) -> Result<()> {
    if spec.emission().kind() != EmissionKind::Bernoulli {
        return Err(Error::Argument("exact enumeration needs Bernoulli emissions".into()));
    }
    Ok(())
}

/// Forward vector `alpha[x] = P(y_0..y_n, X_n = x)` extended by one observation.
fn extend<F: Scalar>(spec: &HmmSpec<F>, alpha: &[F], y: F, y_prev: Option<F>) -> Vec<F> {
    let d = spec.num_states();
    (0..d)
        .map(|xn| {
            let prior = match y_prev {
                None => spec.stationary()[xn],
                Some(_) => (0..d).map(|x| alpha[x] * spec.transition(x, xn)).sum(),
            };
            prior * spec.emission().log_density(xn, y, y_prev).exp()
        })
        .collect()
}

/// Visits every binary sequence `y_0..y_n` with its probability under `spec`.
pub fn enumerate_pre_paths<F: Scalar>(
    spec: &HmmSpec<F>,
    n: usize,
    mut visit: impl FnMut(&[F], F) -> Result<()>,
) -> Result<()> {
    require_bernoulli(spec)?;
    if 2f64.powi(n as i32 + 1) > MAX_TERMS {
        return Err(Error::Argument(format!("2^{} sequences exceed the enumeration cap", n + 1)));
    }
    fn rec<F: Scalar>(
        spec: &HmmSpec<F>,
        n: usize,
        ys: &mut Vec<F>,
        alpha: Vec<F>,
        visit: &mut dyn FnMut(&[F], F) -> Result<()>,
    ) -> Result<()> {
        if ys.len() == n + 1 {
            return visit(ys, alpha.iter().copied().sum());
        }
        for y in [F::zero(), F::one()] {
            let a = extend(spec, &alpha, y, ys.last().copied());
            ys.push(y);
            rec(spec, n, ys, a, visit)?;
            ys.pop();
        }
        Ok(())
    }
    rec(spec, n, &mut Vec::with_capacity(n + 1), Vec::new(), &mut visit)
}

/// Enumerates every observation sequence up to `horizon` under the pre-change
/// law, runs the detector along each branch and stops branches at the alarm.
pub fn exact_oracle<F: Scalar>(
    config: &ExperimentConfig<F>,
    threshold: F,
    horizon: usize,
) -> Result<ExactOracle<F>> {
    let pre = &config.pair.pre;
    require_bernoulli(pre)?;
    if horizon < 1 || horizon > 10 {
        return Err(Error::Argument(format!("oracle horizon {horizon} must lie in 1..=10")));
    }
    let terms = 2f64.powi(horizon as i32) * (pre.num_states() as f64).powi(horizon as i32);
    if terms > MAX_TERMS {
        return Err(Error::Argument(format!("enumeration of {terms} terms exceeds the cap")));
    }
    let log_thr = threshold.ln();
    let mut stop = vec![F::zero(); horizon];
    let mut censored = F::zero();

    struct Node<'a, F> {
        alpha: Vec<F>,
        tracker: LlrTracker<'a, F>,
        det: AnyDetector<F>,
        last: F,
        n: usize,
    }

    let mut stack = Vec::new();
    for y0 in [F::zero(), F::one()] {
        stack.push(Node {
            alpha: extend(pre, &[], y0, None),
            tracker: LlrTracker::new(&config.pair, y0)?,
            det: config.detector.build(&config.prior, log_thr)?,
            last: y0,
            n: 0,
        });
    }
    while let Some(node) = stack.pop() {
        for y in [F::zero(), F::one()] {
            let alpha = extend(pre, &node.alpha, y, Some(node.last));
            let mass: F = alpha.iter().copied().sum();
            let mut tracker = node.tracker.clone();
            let mut det = node.det.clone();
            det.step(tracker.step(y)?)?;
            let n = node.n + 1;
            if det.crossed() {
                stop[n - 1] += mass;
            } else if n == horizon {
                censored += mass;
            } else {
                stack.push(Node {
                    alpha,
                    tracker,
                    det,
                    last: y,
                    n,
                });
            }
        }
    }

    let mut p_false_before = Vec::with_capacity(horizon + 1);
    let mut acc = F::zero();
    p_false_before.push(acc);
    for &p in &stop {
        acc += p;
        p_false_before.push(acc);
    }
    let mut pfa = F::zero();
    for (i, &p) in stop.iter().enumerate() {
        pfa += p * config.prior.survival(i + 1);
    }
    pfa += censored * config.prior.survival(horizon);
    Ok(ExactOracle {
        horizon,
        threshold,
        stop_probabilities: stop,
        p_censored: censored,
        p_false_before,
        pfa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::DetectorKind;
    use crate::experiments::{RunSettings, ThresholdSpec};
    use crate::hmm::{EmissionFamily, RegimePair};
    use crate::priors::ChangePointPrior;

    fn config() -> ExperimentConfig {
        let pre = HmmSpec::new(
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            EmissionFamily::Bernoulli { success: vec![0.2, 0.5] },
        )
        .unwrap();
        let post = HmmSpec::new(
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            EmissionFamily::Bernoulli { success: vec![0.7, 0.9] },
        )
        .unwrap();
        ExperimentConfig::new(
            RegimePair::new(pre, post).unwrap(),
            ChangePointPrior::geometric(0.0, 0.2).unwrap(),
            DetectorKind::Shiryaev,
            ThresholdSpec::List(vec![1.0]),
            RunSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn probabilities_sum_to_one() {
        let c = config();
        let o = exact_oracle(&c, 3.0, 8).unwrap();
        let total: f64 = o.stop_probabilities.iter().sum::<f64>() + o.p_censored;
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(o.p_false_before.len(), 9);
        let mut paths = 0.0;
        enumerate_pre_paths(&c.pair.pre, 5, |_, p| {
            paths += p;
            Ok(())
        })
        .unwrap();
        assert!((paths - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_step_by_hand() {
        // R_1 = rho Lambda_1 / (1 - rho) with R_0 = 0
        let c = config();
        let pre = &c.pair.pre;
        let post = &c.pair.post;
        let a = 0.4;
        let mut p_stop = 0.0;
        for y0 in [0.0, 1.0] {
            for y1 in [0.0, 1.0] {
                let seq = [y0, y1];
                let pinf = crate::likelihood::brute_force_likelihood(pre, &seq).unwrap();
                let pinf0 = crate::likelihood::brute_force_likelihood(pre, &seq[..1]).unwrap();
                let pz = crate::likelihood::brute_force_likelihood(post, &seq).unwrap();
                let pz0 = crate::likelihood::brute_force_likelihood(post, &seq[..1]).unwrap();
                let lambda = (pz / pz0) / (pinf / pinf0);
                if 0.2 * lambda / 0.8 >= a {
                    p_stop += pinf;
                }
            }
        }
        let o = exact_oracle(&c, a, 1).unwrap();
        assert!((o.stop_probabilities[0] - p_stop).abs() < 1e-14);
        assert!((o.pfa - 0.8).abs() < 1e-14);
    }

    #[test]
    fn unreachable_threshold_gives_survival_mass() {
        let c = config();
        let o = exact_oracle(&c, 1e100, 6).unwrap();
        assert_eq!(o.p_censored, 1.0);
        assert!((o.pfa - 0.8_f64.powi(6)).abs() < 1e-14);
    }

    #[test]
    fn caps() {
        let c = config();
        assert!(exact_oracle(&c, 3.0, 11).is_err());
        assert!(exact_oracle(&c, 3.0, 0).is_err());
    }
}
