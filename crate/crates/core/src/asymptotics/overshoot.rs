use crate::error::{Error, Result};
use crate::estimate::{Accumulator, McEstimate};
use crate::hmm::{PathSampler, RegimePair};
use crate::likelihood::LlrTracker;
use crate::rng::{derive_seed, par_replicate, substream, tags};
use crate::scalar::Scalar;

const MAX_STEPS: usize = 10_000_000;

/// Overshoot of the drifted walk `S~_n = S_n + n |log(1 - rho)|` over
/// levels `b` under a change at time 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootConstants<F = f64> {
    /// `E exp(-kappa_b)` at the largest `b`.
    pub zeta: McEstimate<F>,
    /// `E kappa_b` at the largest `b`.
    pub mean_overshoot: McEstimate<F>,
    /// `kappa_b` at the largest `b`, one per replication.
    pub overshoot_samples: Vec<F>,
    pub b_grid: Vec<F>,
    pub zeta_by_b: Vec<McEstimate<F>>,
    pub mean_by_b: Vec<McEstimate<F>>,
    /// Largest standardized change of either estimate between successive levels.
    pub drift: F,
    /// `drift <= 3`.
    pub stabilized: bool,
}

pub fn estimate_overshoot<F: Scalar>(
    pair: &RegimePair<F>,
    rho: F,
    b_grid: &[F],
    reps: usize,
    seed: u64,
) -> Result<OvershootConstants<F>> {
    if !(rho >= F::zero() && rho < F::one()) {
        return Err(Error::Argument(format!("rho = {rho} must lie in [0, 1)")));
    }
    if b_grid.is_empty() || b_grid.windows(2).any(|w| w[1] <= w[0]) || b_grid[0] < F::zero() {
        return Err(Error::Argument("b_grid must be nonnegative and strictly increasing".into()));
    }
    if reps < 2 {
        return Err(Error::Argument("at least two replications are needed".into()));
    }
    let shift = -(-rho).ln_1p();
    let master = derive_seed(seed, tags::OVERSHOOT);
    let runs = par_replicate(reps, |i| {
        let mut rng = substream(master, i as u64);
        let mut sampler = PathSampler::new(pair, Some(1));
        let (_, y0) = sampler.next(&mut rng);
        let mut tracker = LlrTracker::new(pair, y0)?;
        let mut walk = F::zero();
        let mut kappas = Vec::with_capacity(b_grid.len());
        let mut j = 0;
        let mut steps = 0;
        while j < b_grid.len() {
            if steps == MAX_STEPS {
                return Err(Error::Diagnostics(format!(
                    "walk did not reach level {} within {MAX_STEPS} steps; drift may be nonpositive",
                    b_grid[j]
                )));
            }
            let (_, y) = sampler.next(&mut rng);
            walk += tracker.step(y)? + shift;
            steps += 1;
            while j < b_grid.len() && walk >= b_grid[j] {
                kappas.push(walk - b_grid[j]);
                j += 1;
            }
        }
        Ok(kappas)
    })?;
    let mut zeta_by_b = Vec::with_capacity(b_grid.len());
    let mut mean_by_b = Vec::with_capacity(b_grid.len());
    for j in 0..b_grid.len() {
        let mut z = Accumulator::default();
        let mut m = Accumulator::default();
        for r in &runs {
            z.push((-r[j]).exp());
            m.push(r[j]);
        }
        zeta_by_b.push(z.finish());
        mean_by_b.push(m.finish());
    }
    let standardized = |a: &McEstimate<F>, b: &McEstimate<F>| {
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        if se > F::zero() {
            (a.mean - b.mean).abs() / se
        } else if a.mean == b.mean {
            F::zero()
        } else {
            F::infinity()
        }
    };
    let mut drift = F::zero();
    for j in 1..b_grid.len() {
        drift = drift
            .max(standardized(&zeta_by_b[j], &zeta_by_b[j - 1]))
            .max(standardized(&mean_by_b[j], &mean_by_b[j - 1]));
    }
    let last = b_grid.len() - 1;
    Ok(OvershootConstants {
        zeta: zeta_by_b[last],
        mean_overshoot: mean_by_b[last],
        overshoot_samples: runs.iter().map(|r| r[last]).collect(),
        b_grid: b_grid.to_vec(),
        zeta_by_b,
        mean_by_b,
        drift,
        stabilized: drift <= F::lit(3.0),
    })
}
