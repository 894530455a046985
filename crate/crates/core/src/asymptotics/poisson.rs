use crate::error::{Error, Result};
use crate::estimate::{Accumulator, McEstimate};
use crate::hmm::{EmissionKind, PathSampler, RegimePair};
use crate::likelihood::LlrTracker;
use crate::rng::{derive_seed, par_replicate, substream, tags, SimRng};
use crate::scalar::Scalar;

const LADDER_CAP: usize = 10_000_000;

/// Configuration `w` at which the correction is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoissonStart {
    /// Filters at their stationary laws with `Y_0` drawn before the change.
    #[default]
    Fresh,
    /// A configuration reached after `burn_in` post-change steps.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonOptions {
    pub start: PoissonStart,
    pub horizon: usize,
    /// Steps discarded before a configuration counts as stationary.
    pub burn_in: usize,
    pub reps: usize,
    pub enabled: bool,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self { start: PoissonStart::Fresh, horizon: 200, burn_in: 200, reps: 2000, enabled: false }
    }
}

/// Centered Poisson-equation correction at the fresh start and its
/// average over ladder configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonCorrection<F = f64> {
    pub delta_at_w: McEstimate<F>,
    pub integral_term: McEstimate<F>,
    pub enabled: bool,
    /// Second half of the horizon adds nothing significant to either term.
    pub horizon_adequate: bool,
    pub horizon: usize,
}

impl<F: Scalar> PoissonCorrection<F> {
    pub fn disabled(horizon: usize) -> Self {
        Self {
            delta_at_w: zero(),
            integral_term: zero(),
            enabled: false,
            horizon_adequate: true,
            horizon,
        }
    }
}

fn zero<F: Scalar>() -> McEstimate<F> {
    McEstimate { mean: F::zero(), std_error: F::zero(), count: 0, censored_count: 0 }
}

enum Start {
    Fresh,
    Stationary,
    Ladder,
}

/// Returns `(S at horizon / 2, S at horizon)` measured from the start configuration.
fn run<F: Scalar>(
    pair: &RegimePair<F>,
    start: Start,
    shift: F,
    options: &PoissonOptions,
    rng: &mut SimRng,
) -> Result<(F, F)> {
    let mut sampler = PathSampler::new(pair, Some(1));
    let (_, y0) = sampler.next(rng);
    let mut tracker = LlrTracker::new(pair, y0)?;
    let mut walk = F::zero();
    let mut peak = F::zero();
    let mut steps = 0;
    let mut advance = |sampler: &mut PathSampler<'_, F>, rng: &mut SimRng| -> Result<F> {
        let (_, y) = sampler.next(rng);
        tracker.step(y)
    };
    match start {
        Start::Fresh => {}
        Start::Stationary => {
            for _ in 0..options.burn_in {
                advance(&mut sampler, rng)?;
            }
        }
        Start::Ladder => loop {
            let g = advance(&mut sampler, rng)?;
            walk += g + shift;
            steps += 1;
            let record = walk > peak;
            peak = peak.max(walk);
            if record && steps > options.burn_in {
                break;
            }
            if steps == LADDER_CAP {
                return Err(Error::Diagnostics("no ladder epoch found after burn-in".into()));
            }
        },
    }
    let half = options.horizon / 2;
    let mut s = F::zero();
    let mut s_half = F::zero();
    for n in 1..=options.horizon {
        s += advance(&mut sampler, rng)?;
        if n == half {
            s_half = s;
        }
    }
    Ok((s_half, s))
}

pub fn estimate_poisson_correction<F: Scalar>(
    pair: &RegimePair<F>,
    rho: F,
    options: &PoissonOptions,
    seed: u64,
) -> Result<PoissonCorrection<F>> {
    if options.horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    if !(rho >= F::zero() && rho < F::one()) {
        return Err(Error::Argument(format!("rho = {rho} must lie in [0, 1)")));
    }
    if !options.enabled {
        return Ok(PoissonCorrection::disabled(options.horizon));
    }
    if pair.num_states() == 1 && pair.pre.emission().kind() != EmissionKind::Ar1 {
        return Ok(PoissonCorrection { enabled: true, ..PoissonCorrection::disabled(options.horizon) });
    }
    if options.reps < 2 {
        return Err(Error::Argument("at least two replications are needed".into()));
    }
    let shift = -(-rho).ln_1p();
    let master = derive_seed(seed, tags::POISSON);
    let runs = par_replicate(options.reps, |i| {
        let base = 3 * i as u64;
        let start = match options.start {
            PoissonStart::Fresh => Start::Fresh,
            PoissonStart::Stationary => Start::Stationary,
        };
        let w = run(pair, start, shift, options, &mut substream(master, base))?;
        let pi = run(pair, Start::Stationary, shift, options, &mut substream(master, base + 1))?;
        let plus = run(pair, Start::Ladder, shift, options, &mut substream(master, base + 2))?;
        Ok((w, pi, plus))
    })?;
    let mut delta = Accumulator::default();
    let mut integral = Accumulator::default();
    let mut delta_tail = Accumulator::default();
    let mut integral_tail = Accumulator::default();
    for &(w, pi, plus) in &runs {
        delta.push(pi.1 - w.1);
        integral.push(pi.1 - plus.1);
        delta_tail.push((pi.1 - pi.0) - (w.1 - w.0));
        integral_tail.push((pi.1 - pi.0) - (plus.1 - plus.0));
    }
    let negligible = |e: McEstimate<F>| e.within_sigmas(F::zero(), F::lit(3.0));
    Ok(PoissonCorrection {
        delta_at_w: delta.finish(),
        integral_term: integral.finish(),
        enabled: true,
        horizon_adequate: negligible(delta_tail.finish()) && negligible(integral_tail.finish()),
        horizon: options.horizon,
    })
}
