//! Log-domain likelihood filters and log-likelihood-ratio increments.
//!
//! The joint density of `Y_0 .. Y_n` under one regime is the L1 norm of
//! `M_n ... M_1 M_0 pi`, where `M_0 = diag(f(y_0|x))` and
//! `M_k[x', x] = p(x, x') f(y_k | x', y_{k-1})`. Filters keep the normalized
//! vector and the running log norm.

mod brute_force;

pub use brute_force::{brute_force_change_likelihood, brute_force_likelihood};

use crate::error::{Error, Regime, Result};
use crate::hmm::{HmmSpec, RegimePair};
use crate::scalar::Scalar;

/// One factor `M_k`, stored as `exp(log_scale) * scaled`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStep<F = f64> {
    d: usize,
    scaled: Vec<F>,
    log_scale: F,
    pub regime: Regime,
    pub observation: F,
}

impl<F: Scalar> MatrixStep<F> {
    pub fn num_states(&self) -> usize {
        self.d
    }

    /// Entry `(x', x) = p(x, x') f(y | x', y_prev)`.
    pub fn entry(&self, x_next: usize, x: usize) -> F {
        self.scaled[x_next * self.d + x] * self.log_scale.exp()
    }

    pub fn log_scale(&self) -> F {
        self.log_scale
    }

    pub fn scaled_entry(&self, x_next: usize, x: usize) -> F {
        self.scaled[x_next * self.d + x]
    }
}

/// Writes `log f(y | x, y_prev)` for every state and returns the maximum.
fn log_densities<F: Scalar>(spec: &HmmSpec<F>, y: F, y_prev: Option<F>, out: &mut Vec<F>) -> F {
    out.clear();
    let mut m = F::neg_infinity();
    for x in 0..spec.num_states() {
        let l = spec.emission().log_density(x, y, y_prev);
        m = m.max(l);
        out.push(l);
    }
    m
}

fn zero_density<F: Scalar>(regime: Regime, step: usize, y: F) -> Error {
    Error::ZeroDensity {
        regime,
        step,
        observation: y.as_f64(),
    }
}

fn check_finite<F: Scalar>(v: F, step: usize, y: F, what: &str) -> Result<F> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalDomain {
            step,
            observation: y.as_f64(),
            message: format!("{what} is {v}"),
        })
    }
}

pub fn matrix_step<F: Scalar>(
    spec: &HmmSpec<F>,
    regime: Regime,
    y: F,
    y_prev: F,
) -> Result<MatrixStep<F>> {
    let d = spec.num_states();
    let mut logf = Vec::with_capacity(d);
    let m = log_densities(spec, y, Some(y_prev), &mut logf);
    if m == F::neg_infinity() {
        return Err(zero_density(regime, 0, y));
    }
    check_finite(m, 0, y, "log density")?;
    let mut scaled = vec![F::zero(); d * d];
    for xn in 0..d {
        let e = (logf[xn] - m).exp();
        for x in 0..d {
            scaled[xn * d + x] = spec.transition(x, xn) * e;
        }
    }
    Ok(MatrixStep {
        d,
        scaled,
        log_scale: m,
        regime,
        observation: y,
    })
}

/// Normalized forward vector with its accumulated log norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<F = f64> {
    pub weights: Vec<F>,
    pub log_norm: F,
    pub last_observation: F,
    pub step_index: usize,
}

/// Initializes at time 0: weights proportional to `f(y_0|x) pi(x)`.
pub fn filter_init<F: Scalar>(spec: &HmmSpec<F>, regime: Regime, y0: F) -> Result<FilterState<F>> {
    filter_init_from(spec, regime, spec.stationary(), y0, None, 0)
}

/// Initializes at step `step` with prior weights `prior` on the state at that
/// step and the diagonal emission factor for `y` (conditioning on `y_prev`).
pub fn filter_init_from<F: Scalar>(
    spec: &HmmSpec<F>,
    regime: Regime,
    prior: &[F],
    y: F,
    y_prev: Option<F>,
    step: usize,
) -> Result<FilterState<F>> {
    let mut logf = Vec::with_capacity(spec.num_states());
    let m = log_densities(spec, y, y_prev, &mut logf);
    if m == F::neg_infinity() {
        return Err(zero_density(regime, step, y));
    }
    check_finite(m, step, y, "log density")?;
    let mut weights: Vec<F> = prior
        .iter()
        .zip(&logf)
        .map(|(&p, &l)| p * (l - m).exp())
        .collect();
    let s: F = weights.iter().copied().sum();
    if !(s > F::zero()) {
        return Err(zero_density(regime, step, y));
    }
    for w in weights.iter_mut() {
        *w /= s;
    }
    Ok(FilterState {
        weights,
        log_norm: m + s.ln(),
        last_observation: y,
        step_index: step,
    })
}

impl<F: Scalar> FilterState<F> {
    /// A state with given weights, zero log norm, positioned after `y` at `step`.
    pub fn from_weights(weights: Vec<F>, last_observation: F, step: usize) -> Self {
        Self {
            weights,
            log_norm: F::zero(),
            last_observation,
            step_index: step,
        }
    }

    /// Applies `M_{n+1}` for observation `y` and returns the log-norm increment.
    ///
    /// Same arithmetic as `filter_update(matrix_step(..))`, without allocating the matrix.
    pub fn advance(&mut self, spec: &HmmSpec<F>, regime: Regime, y: F) -> Result<F> {
        let d = spec.num_states();
        let step = self.step_index + 1;
        let mut logf = Vec::with_capacity(d);
        let m = log_densities(spec, y, Some(self.last_observation), &mut logf);
        if m == F::neg_infinity() {
            return Err(zero_density(regime, step, y));
        }
        check_finite(m, step, y, "log density")?;
        let mut v = vec![F::zero(); d];
        let mut s = F::zero();
        for xn in 0..d {
            let e = (logf[xn] - m).exp();
            let mut acc = F::zero();
            for x in 0..d {
                acc += spec.transition(x, xn) * e * self.weights[x];
            }
            v[xn] = acc;
            s += acc;
        }
        if !(s > F::zero()) {
            return Err(zero_density(regime, step, y));
        }
        for w in v.iter_mut() {
            *w /= s;
        }
        let inc = m + s.ln();
        self.weights = v;
        self.log_norm += inc;
        self.last_observation = y;
        self.step_index = step;
        Ok(inc)
    }
}

/// `v = M u`; log norm and weights updated with running normalization.
pub fn filter_update<F: Scalar>(state: &FilterState<F>, step: &MatrixStep<F>) -> Result<FilterState<F>> {
    let d = step.d;
    if state.weights.len() != d {
        return Err(Error::Argument("filter and matrix dimensions differ".into()));
    }
    let n = state.step_index + 1;
    let mut v = vec![F::zero(); d];
    let mut s = F::zero();
    for xn in 0..d {
        let mut acc = F::zero();
        for x in 0..d {
            acc += step.scaled[xn * d + x] * state.weights[x];
        }
        v[xn] = acc;
        s += acc;
    }
    if !(s > F::zero()) {
        return Err(zero_density(step.regime, n, step.observation));
    }
    for w in v.iter_mut() {
        *w /= s;
    }
    Ok(FilterState {
        weights: v,
        log_norm: state.log_norm + (step.log_scale + s.ln()),
        last_observation: step.observation,
        step_index: n,
    })
}

/// `g_n = delta log_norm(post) - delta log_norm(pre)` for observation `y_n`.
pub fn llr_increment<F: Scalar>(
    pair: &RegimePair<F>,
    pre_state: &FilterState<F>,
    post_state: &FilterState<F>,
    y: F,
) -> Result<(F, FilterState<F>, FilterState<F>)> {
    let mut pre = pre_state.clone();
    let mut post = post_state.clone();
    let g = llr_increment_in_place(pair, &mut pre, &mut post, y)?;
    Ok((g, pre, post))
}

fn llr_increment_in_place<F: Scalar>(
    pair: &RegimePair<F>,
    pre: &mut FilterState<F>,
    post: &mut FilterState<F>,
    y: F,
) -> Result<F> {
    let step = pre.step_index + 1;
    let a = pre.advance(&pair.pre, Regime::Pre, y)?;
    let b = post.advance(&pair.post, Regime::Post, y)?;
    check_finite(b - a, step, y, "log-likelihood-ratio increment")
}

/// Running pair of filters producing `log Lambda_n` for `n = 1, 2, ...`.
///
/// `Lambda_0 = 1`: the time-0 ratio is not part of the increments, so the
/// cumulative sum equals `log LR_n - log LR_0`.
#[derive(Debug, Clone)]
pub struct LlrTracker<'a, F = f64> {
    pair: &'a RegimePair<F>,
    pub pre: FilterState<F>,
    pub post: FilterState<F>,
    cumulative: F,
}

impl<'a, F: Scalar> LlrTracker<'a, F> {
    pub fn new(pair: &'a RegimePair<F>, y0: F) -> Result<Self> {
        Ok(Self {
            pair,
            pre: filter_init(&pair.pre, Regime::Pre, y0)?,
            post: filter_init(&pair.post, Regime::Post, y0)?,
            cumulative: F::zero(),
        })
    }

    pub fn step(&mut self, y: F) -> Result<F> {
        let g = llr_increment_in_place(self.pair, &mut self.pre, &mut self.post, y)?;
        self.cumulative += g;
        Ok(g)
    }

    pub fn cumulative(&self) -> F {
        self.cumulative
    }

    /// `log p_0(y_0) - log p_inf(y_0)`, excluded from the increments.
    pub fn initial_log_ratio(&self) -> F {
        self.post.log_norm - self.pre.log_norm - self.cumulative
    }

    pub fn step_index(&self) -> usize {
        self.pre.step_index
    }

    pub fn pair(&self) -> &'a RegimePair<F> {
        self.pair
    }
}

/// All increments `g_1 .. g_n` of a stored path and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrStream<F = f64> {
    pub increments: Vec<F>,
    pub cumulative: F,
}

pub fn llr_stream<F: Scalar>(pair: &RegimePair<F>, observations: &[F]) -> Result<LlrStream<F>> {
    let (y0, rest) = observations
        .split_first()
        .ok_or_else(|| Error::Argument("empty observation sequence".into()))?;
    let mut t = LlrTracker::new(pair, *y0)?;
    let increments = rest.iter().map(|&y| t.step(y)).collect::<Result<Vec<_>>>()?;
    Ok(LlrStream {
        increments,
        cumulative: t.cumulative(),
    })
}

/// How the post-change filter is started for a change at `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LlrMode {
    /// Post filter starts from the pre-change posterior of `X_{k-1}`.
    #[default]
    Exact,
    /// Both regimes restart at `k` from their own stationary laws.
    Restart,
}

/// Incremental `S^k_n` for a fixed candidate change point `k >= 1`.
#[derive(Debug, Clone)]
pub struct SegmentTracker<'a, F = f64> {
    pair: &'a RegimePair<F>,
    mode: LlrMode,
    k: usize,
    pre: Option<FilterState<F>>,
    seg_pre: Option<FilterState<F>>,
    seg_post: Option<FilterState<F>>,
    value: F,
    next: usize,
}

impl<'a, F: Scalar> SegmentTracker<'a, F> {
    pub fn new(pair: &'a RegimePair<F>, k: usize, mode: LlrMode) -> Result<Self> {
        if k < 1 {
            return Err(Error::Argument("change point k must be at least 1".into()));
        }
        Ok(Self {
            pair,
            mode,
            k,
            pre: None,
            seg_pre: None,
            seg_post: None,
            value: F::zero(),
            next: 0,
        })
    }

    /// Feeds `y_n` for `n = 0, 1, ...`; returns `S^k_n` once `n >= k`.
    pub fn push(&mut self, y: F) -> Result<Option<F>> {
        let n = self.next;
        self.next += 1;
        if n == 0 {
            self.pre = Some(filter_init(&self.pair.pre, Regime::Pre, y)?);
            return Ok(None);
        }
        if n < self.k {
            let pre = self.pre.as_mut().expect("initialized at n = 0");
            pre.advance(&self.pair.pre, Regime::Pre, y)?;
            return Ok(None);
        }
        if n == self.k {
            let pre = self.pre.take().expect("initialized at n = 0");
            match self.mode {
                LlrMode::Exact => {
                    let mut a = pre.clone();
                    let mut b = FilterState::from_weights(pre.weights.clone(), pre.last_observation, pre.step_index);
                    let ia = a.advance(&self.pair.pre, Regime::Pre, y)?;
                    let ib = b.advance(&self.pair.post, Regime::Post, y)?;
                    self.value = check_finite(ib - ia, n, y, "log-likelihood-ratio increment")?;
                    self.seg_pre = Some(a);
                    self.seg_post = Some(b);
                }
                LlrMode::Restart => {
                    let prev = Some(pre.last_observation);
                    let a = filter_init_from(&self.pair.pre, Regime::Pre, self.pair.pre.stationary(), y, prev, n)?;
                    let b = filter_init_from(&self.pair.post, Regime::Post, self.pair.post.stationary(), y, prev, n)?;
                    self.value = check_finite(b.log_norm - a.log_norm, n, y, "log-likelihood ratio")?;
                    self.seg_pre = Some(a);
                    self.seg_post = Some(b);
                }
            }
            return Ok(Some(self.value));
        }
        let a = self.seg_pre.as_mut().expect("segment started");
        let b = self.seg_post.as_mut().expect("segment started");
        let g = llr_increment_in_place(self.pair, a, b, y)?;
        self.value += g;
        Ok(Some(self.value))
    }

    pub fn value(&self) -> F {
        self.value
    }
}

/// `S^k_n = log p_k(Y_k^n | Y_0^{k-1}) - log p_inf(Y_k^n | Y_0^{k-1})`.
pub fn llr_segment<F: Scalar>(
    pair: &RegimePair<F>,
    observations: &[F],
    k: usize,
    n: usize,
    mode: LlrMode,
) -> Result<F> {
    if k < 1 || k > n {
        return Err(Error::Argument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if n >= observations.len() {
        return Err(Error::Argument(format!(
            "n = {n} beyond the last observation index {}",
            observations.len().saturating_sub(1)
        )));
    }
    let mut t = SegmentTracker::new(pair, k, mode)?;
    let mut last = F::zero();
    for &y in &observations[..=n] {
        if let Some(v) = t.push(y)? {
            last = v;
        }
    }
    Ok(last)
}
