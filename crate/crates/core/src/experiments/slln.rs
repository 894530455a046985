use crate::error::{Error, Result};
use crate::estimate::Accumulator;
use crate::hmm::{kl_information, PathSampler, RegimePair};
use crate::likelihood::{LlrMode, SegmentTracker};
use crate::rng::{derive_seed, par_replicate, substream, tags};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SllnOptions<F = f64> {
    /// Candidate change point `k`; the path changes at `k` as well.
    pub k: usize,
    pub mode: LlrMode,
    pub kl_steps: usize,
    /// Use this value instead of estimating the information number.
    pub information: Option<F>,
}

impl<F: Scalar> Default for SllnOptions<F> {
    fn default() -> Self {
        Self {
            k: 1,
            mode: LlrMode::Exact,
            kl_steps: 200_000,
            information: None,
        }
    }
}

/// Empirical last-entry times of `S^k_{k+n-1} / n` into the band `K +- eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SllnDiagnostic<F = f64> {
    pub epsilon: F,
    pub information: F,
    pub n_max: usize,
    /// Per-replication last exit time; `0` when the path never left the band.
    pub last_exit: Vec<usize>,
    /// `P(tau > n)` for `n = 0..n_max`.
    pub survival: Vec<F>,
    /// Quantiles at levels 0.5, 0.9, 0.99.
    pub quantiles: [usize; 3],
    /// Fraction with `tau = n_max`.
    pub non_settled_fraction: F,
    /// `(n, mean, sd)` of `S/n` at logarithmically spaced checkpoints.
    pub trajectory: Vec<(usize, F, F)>,
    /// Survival curve nonincreasing and strictly smaller at the end than at the start.
    pub trend_ok: bool,
}

pub fn slln_diagnostic<F: Scalar>(
    pair: &RegimePair<F>,
    epsilon: F,
    n_max: usize,
    reps: usize,
    seed: u64,
) -> Result<SllnDiagnostic<F>> {
    slln_diagnostic_with(pair, epsilon, n_max, reps, seed, &SllnOptions::default())
}

pub fn slln_diagnostic_with<F: Scalar>(
    pair: &RegimePair<F>,
    epsilon: F,
    n_max: usize,
    reps: usize,
    seed: u64,
    opts: &SllnOptions<F>,
) -> Result<SllnDiagnostic<F>> {
    if !(epsilon > F::zero()) {
        return Err(Error::Argument("epsilon must be positive".into()));
    }
    if n_max < 1 || reps < 1 || opts.k < 1 {
        return Err(Error::Argument("n_max, reps and k must be at least 1".into()));
    }
    let information = match opts.information {
        Some(k) => k,
        None => kl_information(pair, opts.kl_steps.max(1000), derive_seed(seed, tags::KL))?.mean,
    };
    let mut checkpoints: Vec<usize> = std::iter::successors(Some(1usize), |&n| Some(n * 2))
        .take_while(|&n| n <= n_max)
        .collect();
    if checkpoints.last() != Some(&n_max) {
        checkpoints.push(n_max);
    }
    let master = derive_seed(seed, tags::SLLN);
    let runs = par_replicate(reps, |i| {
        let mut rng = substream(master, i as u64);
        let mut sampler = PathSampler::new(pair, Some(opts.k));
        let mut seg = SegmentTracker::new(pair, opts.k, opts.mode)?;
        let mut last = 0;
        let mut marks = Vec::with_capacity(checkpoints.len());
        let mut c = 0;
        let mut n = 0;
        while n < n_max {
            let (_, y) = sampler.next(&mut rng);
            if let Some(s) = seg.push(y)? {
                n += 1;
                let avg = s / F::from_usize_lossy(n);
                if (avg - information).abs() > epsilon {
                    last = n;
                }
                if c < checkpoints.len() && checkpoints[c] == n {
                    marks.push(avg);
                    c += 1;
                }
            }
        }
        Ok((last, marks))
    })?;

    let last_exit: Vec<usize> = runs.iter().map(|r| r.0).collect();
    let total = F::from_usize_lossy(reps);
    let mut counts = vec![0usize; n_max + 1];
    for &t in &last_exit {
        counts[t] += 1;
    }
    let mut survival = Vec::with_capacity(n_max);
    let mut above = reps;
    for &c in counts.iter().take(n_max) {
        above -= c;
        survival.push(F::from_usize_lossy(above) / total);
    }
    let mut sorted = last_exit.clone();
    sorted.sort_unstable();
    let q = |p: f64| sorted[(((reps - 1) as f64) * p).round() as usize];
    let trajectory = checkpoints
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut acc = Accumulator::default();
            for r in &runs {
                acc.push(r.1[j]);
            }
            (n, acc.mean(), acc.variance().sqrt())
        })
        .collect();
    let trend_ok = survival.windows(2).all(|w| w[1] <= w[0])
        && survival.last() < survival.first();
    Ok(SllnDiagnostic {
        epsilon,
        information,
        n_max,
        non_settled_fraction: F::from_usize_lossy(counts[n_max]) / total,
        last_exit,
        survival,
        quantiles: [q(0.5), q(0.9), q(0.99)],
        trajectory,
        trend_ok,
    })
}
