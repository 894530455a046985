use crate::error::{Error, Result};
use crate::estimate::{batch_means, McEstimate};
use crate::hmm::{PathSampler, RegimePair};
use crate::likelihood::LlrTracker;
use crate::rng::substream;
use crate::scalar::Scalar;

const BATCHES: usize = 50;

/// `S_n / n` along one post-change path (change at 0) with a batch-means error.
pub fn kl_information<F: Scalar>(pair: &RegimePair<F>, num_steps: usize, seed: u64) -> Result<McEstimate<F>> {
    if num_steps < 1000 {
        return Err(Error::Argument(format!("num_steps = {num_steps}, need at least 1000")));
    }
    let mut rng = substream(seed, 0);
    let mut sampler = PathSampler::new(pair, Some(0));
    let (_, y0) = sampler.next(&mut rng);
    let mut tracker = LlrTracker::new(pair, y0)?;
    let mut increments = Vec::with_capacity(num_steps);
    for _ in 0..num_steps {
        let (_, y) = sampler.next(&mut rng);
        increments.push(tracker.step(y)?);
    }
    Ok(batch_means(&increments, BATCHES))
}
