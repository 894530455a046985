use crate::detectors::Detector;
use crate::error::{Error, Result};
use crate::estimate::{Accumulator, McEstimate};
use crate::hmm::PathSampler;
use crate::likelihood::LlrTracker;
use crate::rng::{derive_seed, par_replicate, substream, tags, SimRng};
use crate::scalar::Scalar;

use super::ExperimentConfig;

/// Operating characteristic of one detector at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingCharacteristic<F = f64> {
    pub detector: &'static str,
    pub threshold: F,
    pub pfa: McEstimate<F>,
    /// Conditional delay moments `E[(T - nu)^m | T >= nu]`, `m = 1..=r`.
    pub moments: Vec<McEstimate<F>>,
    pub reps: usize,
    /// Delay replications excluded because no alarm occurred by the horizon.
    pub censored: usize,
    pub seed: u64,
}

impl<F: Scalar> OperatingCharacteristic<F> {
    pub fn add(&self) -> &McEstimate<F> {
        &self.moments[0]
    }
}

/// First crossing time of each (ascending) log threshold along one path, or
/// `None` if it was not reached by `horizon`.
pub(crate) fn crossing_times<F: Scalar>(
    config: &ExperimentConfig<F>,
    log_thresholds: &[F],
    change_point: Option<usize>,
    horizon: usize,
    rng: &mut SimRng,
) -> Result<Vec<Option<usize>>> {
    let mut sampler = PathSampler::new(&config.pair, change_point);
    let (_, y0) = sampler.next(rng);
    let mut tracker = LlrTracker::new(&config.pair, y0)?;
    let mut det = config.detector.build(&config.prior, F::infinity())?;
    let m = log_thresholds.len();
    let mut out = vec![None; m];
    let mut next = 0;
    for n in 1..=horizon {
        let (_, y) = sampler.next(rng);
        det.step(tracker.step(y)?)?;
        let s = det.log_statistic();
        while next < m && s >= log_thresholds[next] {
            out[next] = Some(n);
            next += 1;
        }
        if next == m {
            break;
        }
    }
    Ok(out)
}

fn log_thresholds<F: Scalar>(thresholds: &[F]) -> Result<Vec<F>> {
    if thresholds.is_empty() {
        return Err(Error::Argument("no thresholds given".into()));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("thresholds must be ascending".into()));
    }
    thresholds
        .iter()
        .map(|&t| {
            if t > F::zero() && t.is_finite() {
                Ok(t.ln())
            } else {
                Err(Error::Argument(format!("threshold {t} must be positive and finite")))
            }
        })
        .collect()
}

/// Horizon for false-alarm runs: nothing beyond the point where the
/// survival function falls below the configured tolerance can matter.
fn pfa_horizon<F: Scalar>(config: &ExperimentConfig<F>) -> usize {
    let tol = config.run.pfa_tail_tol;
    if !(tol > F::zero()) {
        return config.run.horizon;
    }
    let lt = tol.ln();
    let mut lo = 0usize;
    let mut hi = config.run.horizon;
    if config.prior.log_survival(hi) > lt {
        return hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if config.prior.log_survival(mid) <= lt {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(1)
}

/// `PFA = E_inf[P(nu > T)]` for each threshold (ascending), from the same
/// replications. Runs that never alarm are scored with `P(nu > horizon)`.
pub fn estimate_pfa_grid<F: Scalar>(
    config: &ExperimentConfig<F>,
    thresholds: &[F],
) -> Result<Vec<McEstimate<F>>> {
    let logs = log_thresholds(thresholds)?;
    let horizon = pfa_horizon(config);
    let master = derive_seed(config.run.seed, tags::PFA);
    let runs = par_replicate(config.run.reps, |i| {
        let mut rng = substream(master, i as u64);
        crossing_times(config, &logs, None, horizon, &mut rng)
    })?;
    let mut out = Vec::with_capacity(logs.len());
    for j in 0..logs.len() {
        let mut acc = Accumulator::default();
        let mut censored = 0;
        for r in &runs {
            let t = match r[j] {
                Some(t) => t,
                None => {
                    censored += 1;
                    horizon
                }
            };
            acc.push(config.prior.survival(t));
        }
        out.push(acc.finish().with_censored(censored));
    }
    Ok(out)
}

pub fn estimate_pfa<F: Scalar>(config: &ExperimentConfig<F>, threshold: F) -> Result<McEstimate<F>> {
    Ok(estimate_pfa_grid(config, &[threshold])?.remove(0))
}

/// Conditional delay moments `m = 1..=moments` for each threshold, with the
/// change point drawn from the prior and planted in the path.
pub fn estimate_add_grid<F: Scalar>(
    config: &ExperimentConfig<F>,
    thresholds: &[F],
    moments: usize,
) -> Result<Vec<Vec<McEstimate<F>>>> {
    if moments < 1 {
        return Err(Error::Argument("moment order must be at least 1".into()));
    }
    let logs = log_thresholds(thresholds)?;
    let horizon = config.run.horizon;
    let master = derive_seed(config.run.seed, tags::ADD);
    let runs = par_replicate(config.run.reps, |i| {
        let mut rng = substream(master, i as u64);
        let nu = config.prior.sample(&mut rng);
        let times = crossing_times(config, &logs, Some(nu), horizon, &mut rng)?;
        Ok((nu, times))
    })?;
    let mut out = Vec::with_capacity(logs.len());
    for j in 0..logs.len() {
        let mut accs = vec![Accumulator::default(); moments];
        let mut censored = 0;
        for (nu, times) in &runs {
            match times[j] {
                None => censored += 1,
                Some(t) if t >= *nu => {
                    let d = F::from_usize_lossy(t - nu);
                    let mut p = F::one();
                    for acc in accs.iter_mut() {
                        p *= d;
                        acc.push(p);
                    }
                }
                Some(_) => {}
            }
        }
        if accs[0].count() == 0 {
            return Err(Error::Estimation(format!(
                "no replication satisfied T >= nu at threshold {} ({censored} of {} censored at horizon {horizon})",
                thresholds[j], config.run.reps
            )));
        }
        out.push(accs.iter().map(|a| a.finish().with_censored(censored)).collect());
    }
    Ok(out)
}

pub fn estimate_add<F: Scalar>(config: &ExperimentConfig<F>, threshold: F, m: usize) -> Result<McEstimate<F>> {
    let mut v = estimate_add_grid(config, &[threshold], m)?.remove(0);
    Ok(v.remove(m - 1))
}

/// `E_k[T - k + 1 | T >= k]` at the fixed change point `k = run.change_point`,
/// i.e. post-change observations up to and including the alarm. At `k = 1`
/// this is `E_1 T`, the quantity the higher-order expansions approximate.
pub fn estimate_run_length_grid<F: Scalar>(
    config: &ExperimentConfig<F>,
    thresholds: &[F],
) -> Result<Vec<McEstimate<F>>> {
    let logs = log_thresholds(thresholds)?;
    let k = config.run.change_point;
    let horizon = config.run.horizon;
    let master = derive_seed(config.run.seed, tags::RUN_LENGTH);
    let runs = par_replicate(config.run.reps, |i| {
        let mut rng = substream(master, i as u64);
        crossing_times(config, &logs, Some(k), horizon, &mut rng)
    })?;
    let mut out = Vec::with_capacity(logs.len());
    for j in 0..logs.len() {
        let mut acc = Accumulator::default();
        let mut censored = 0;
        for r in &runs {
            match r[j] {
                None => censored += 1,
                Some(t) if t >= k => acc.push(F::from_usize_lossy(t + 1 - k)),
                Some(_) => {}
            }
        }
        if acc.count() == 0 {
            return Err(Error::Estimation(format!(
                "no replication satisfied T >= {k} at threshold {}",
                thresholds[j]
            )));
        }
        out.push(acc.finish().with_censored(censored));
    }
    Ok(out)
}

/// PFA and delay moments over the configured thresholds, ascending.
pub fn simulate<F: Scalar>(config: &ExperimentConfig<F>) -> Result<Vec<OperatingCharacteristic<F>>> {
    config.validate()?;
    let thresholds = config.resolved_thresholds()?;
    let pfa = estimate_pfa_grid(config, &thresholds)?;
    let moments = config.run.moments.max(2);
    let add = estimate_add_grid(config, &thresholds, moments)?;
    Ok(thresholds
        .iter()
        .zip(pfa)
        .zip(add)
        .map(|((&threshold, pfa), moments)| OperatingCharacteristic {
            detector: config.detector.name(),
            threshold,
            censored: moments[0].censored_count,
            pfa,
            moments,
            reps: config.run.reps,
            seed: config.run.seed,
        })
        .collect())
}
