//! Finite-state hidden Markov models, regime pairs and path sampling.

mod kl;

pub use kl::kl_information;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Regime, Result};
use crate::rng::{substream, SimRng};
use crate::scalar::Scalar;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Emission family kind, used to check that two regimes are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionKind {
    Gaussian,
    Bernoulli,
    Ar1,
}

/// Observation law given the hidden state (and, for AR(1), the previous observation).
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionFamily<F = f64> {
    /// `Y | X = x ~ N(means[x], std_devs[x]^2)`.
    Gaussian { means: Vec<F>, std_devs: Vec<F> },
    /// `Y | X = x ~ Bernoulli(success[x])` on `{0, 1}`.
    Bernoulli { success: Vec<F> },
    /// `Y' = coeffs[x] * Y + e`, `e ~ N(0, 1)`. Y_0 uses the stationary
    /// marginal `N(0, 1 / (1 - a^2))` of the current state's coefficient.
    Ar1 { coeffs: Vec<F> },
}

impl<F: Scalar> EmissionFamily<F> {
    pub fn kind(&self) -> EmissionKind {
        match self {
            EmissionFamily::Gaussian { .. } => EmissionKind::Gaussian,
            EmissionFamily::Bernoulli { .. } => EmissionKind::Bernoulli,
            EmissionFamily::Ar1 { .. } => EmissionKind::Ar1,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            EmissionFamily::Gaussian { means, .. } => means.len(),
            EmissionFamily::Bernoulli { success } => success.len(),
            EmissionFamily::Ar1 { coeffs } => coeffs.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ModelValidation(m));
        match self {
            EmissionFamily::Gaussian { means, std_devs } => {
                if means.len() != std_devs.len() {
                    return bad("gaussian means and std_devs differ in length".into());
                }
                if means.iter().any(|m| !m.is_finite()) {
                    return bad("gaussian means must be finite".into());
                }
                if std_devs.iter().any(|s| !(s.is_finite() && *s > F::zero())) {
                    return bad("gaussian std_devs must be positive and finite".into());
                }
            }
            EmissionFamily::Bernoulli { success } => {
                if success.iter().any(|p| !(*p > F::zero() && *p < F::one())) {
                    return bad("bernoulli success probabilities must lie in (0, 1)".into());
                }
            }
            EmissionFamily::Ar1 { coeffs } => {
                if coeffs.iter().any(|a| !(a.abs() < F::one())) {
                    return bad("ar1 coefficients must lie strictly inside (-1, 1)".into());
                }
            }
        }
        Ok(())
    }

    /// True when every state has the same emission law.
    pub fn is_state_independent(&self) -> bool {
        fn all_eq<F: PartialEq>(v: &[F]) -> bool {
            v.windows(2).all(|w| w[0] == w[1])
        }
        match self {
            EmissionFamily::Gaussian { means, std_devs } => all_eq(means) && all_eq(std_devs),
            EmissionFamily::Bernoulli { success } => all_eq(success),
            EmissionFamily::Ar1 { coeffs } => all_eq(coeffs),
        }
    }

    /// `log f(y | x, y_prev)`; `y_prev = None` at time 0.
    pub fn log_density(&self, state: usize, y: F, y_prev: Option<F>) -> F {
        let half = F::lit(0.5);
        let ln_sqrt_2pi = F::lit(LN_SQRT_2PI);
        match self {
            EmissionFamily::Gaussian { means, std_devs } => {
                let z = (y - means[state]) / std_devs[state];
                -half * z * z - std_devs[state].ln() - ln_sqrt_2pi
            }
            EmissionFamily::Bernoulli { success } => {
                let p = success[state];
                if y == F::one() {
                    p.ln()
                } else if y == F::zero() {
                    (F::one() - p).ln()
                } else {
                    F::neg_infinity()
                }
            }
            EmissionFamily::Ar1 { coeffs } => {
                let a = coeffs[state];
                match y_prev {
                    Some(prev) => {
                        let e = y - a * prev;
                        -half * e * e - ln_sqrt_2pi
                    }
                    None => {
                        let var = F::one() / (F::one() - a * a);
                        -half * y * y / var - half * var.ln() - ln_sqrt_2pi
                    }
                }
            }
        }
    }

    pub fn sample(&self, state: usize, y_prev: Option<F>, rng: &mut SimRng) -> F {
        match self {
            EmissionFamily::Gaussian { means, std_devs } => {
                let z: f64 = StandardNormal.sample(rng);
                means[state] + std_devs[state] * F::lit(z)
            }
            EmissionFamily::Bernoulli { success } => {
                let u: f64 = rng.random();
                if u < success[state].as_f64() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            EmissionFamily::Ar1 { coeffs } => {
                let z: f64 = StandardNormal.sample(rng);
                let a = coeffs[state];
                match y_prev {
                    Some(prev) => a * prev + F::lit(z),
                    None => F::lit(z) / (F::one() - a * a).sqrt(),
                }
            }
        }
    }
}

/// One regime: a transition matrix, its stationary law and an emission family.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec<F = f64> {
    d: usize,
    transition: Vec<F>,
    stationary: Vec<F>,
    emission: EmissionFamily<F>,
}

impl<F: Scalar> HmmSpec<F> {
    pub fn new(transition: Vec<Vec<F>>, emission: EmissionFamily<F>) -> Result<Self> {
        let d = transition.len();
        if d == 0 {
            return Err(Error::ModelValidation("at least one hidden state required".into()));
        }
        if emission.num_states() != d {
            return Err(Error::ModelValidation(format!(
                "emission has {} states, transition has {d}",
                emission.num_states()
            )));
        }
        emission.validate()?;
        let stationary = stationary_distribution(&transition)?;
        Ok(Self {
            d,
            transition: transition.into_iter().flatten().collect(),
            stationary,
            emission,
        })
    }

    /// Single-state model with the given emission.
    pub fn iid(emission: EmissionFamily<F>) -> Result<Self> {
        Self::new(vec![vec![F::one()]], emission)
    }

    pub fn num_states(&self) -> usize {
        self.d
    }

    /// `p(x, x')`.
    #[inline]
    pub fn transition(&self, x: usize, x_next: usize) -> F {
        self.transition[x * self.d + x_next]
    }

    pub fn transition_row(&self, x: usize) -> &[F] {
        &self.transition[x * self.d..(x + 1) * self.d]
    }

    pub fn transition_rows(&self) -> Vec<Vec<F>> {
        self.transition.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn stationary(&self) -> &[F] {
        &self.stationary
    }

    pub fn emission(&self) -> &EmissionFamily<F> {
        &self.emission
    }

    fn sample_categorical(probs: &[F], rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p.as_f64();
            if u < acc {
                return i;
            }
        }
        probs.iter().rposition(|p| *p > F::zero()).unwrap_or(0)
    }

    pub fn sample_initial_state(&self, rng: &mut SimRng) -> usize {
        Self::sample_categorical(&self.stationary, rng)
    }

    pub fn sample_next_state(&self, x: usize, rng: &mut SimRng) -> usize {
        Self::sample_categorical(self.transition_row(x), rng)
    }
}

fn validation(msg: impl Into<String>) -> Error {
    Error::ModelValidation(msg.into())
}

/// Boolean matrix product on `d x d` adjacency patterns.
fn bool_mul(a: &[bool], b: &[bool], d: usize) -> Vec<bool> {
    let mut out = vec![false; d * d];
    for i in 0..d {
        for k in 0..d {
            if a[i * d + k] {
                for j in 0..d {
                    out[i * d + j] |= b[k * d + j];
                }
            }
        }
    }
    out
}

/// Stationary law of a row-stochastic, irreducible, aperiodic matrix.
pub fn stationary_distribution<F: Scalar>(transition: &[Vec<F>]) -> Result<Vec<F>> {
    let d = transition.len();
    if d == 0 {
        return Err(validation("empty transition matrix"));
    }
    let tol = F::structural_tol();
    for (i, row) in transition.iter().enumerate() {
        if row.len() != d {
            return Err(validation(format!("transition row {i} has length {}, expected {d}", row.len())));
        }
        if row.iter().any(|p| !p.is_finite() || *p < F::zero()) {
            return Err(validation(format!("transition row {i} has a negative or non-finite entry")));
        }
        let s: F = row.iter().copied().sum();
        if (s - F::one()).abs() > tol {
            return Err(validation(format!("transition row {i} sums to {s}, not 1")));
        }
    }

    let adj: Vec<bool> = transition.iter().flatten().map(|p| *p > F::zero()).collect();
    let mut power = adj.clone();
    let mut primitive = power.iter().all(|&b| b);
    for _ in 1..d * d {
        if primitive {
            break;
        }
        power = bool_mul(&power, &adj, d);
        primitive = power.iter().all(|&b| b);
    }
    if !primitive {
        let mut reach: Vec<bool> = (0..d * d).map(|i| adj[i] || i / d == i % d).collect();
        for _ in 0..d {
            reach = bool_mul(&reach, &reach, d);
        }
        return Err(if reach.iter().all(|&b| b) {
            validation("transition matrix is periodic (no power up to d^2 is strictly positive)")
        } else {
            validation("transition matrix is reducible")
        });
    }

    // Solve (P^t - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = vec![F::zero(); d * (d + 1)];
    for i in 0..d {
        for j in 0..d {
            a[i * (d + 1) + j] = transition[j][i] - if i == j { F::one() } else { F::zero() };
        }
    }
    for j in 0..d {
        a[(d - 1) * (d + 1) + j] = F::one();
    }
    a[(d - 1) * (d + 1) + d] = F::one();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&r, &s| {
                a[r * (d + 1) + col]
                    .abs()
                    .partial_cmp(&a[s * (d + 1) + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if a[piv * (d + 1) + col] == F::zero() {
            return Err(validation("singular stationary system"));
        }
        if piv != col {
            for j in 0..=d {
                a.swap(piv * (d + 1) + j, col * (d + 1) + j);
            }
        }
        let p = a[col * (d + 1) + col];
        for r in 0..d {
            if r != col {
                let f = a[r * (d + 1) + col] / p;
                if f != F::zero() {
                    for j in col..=d {
                        let v = a[col * (d + 1) + j];
                        a[r * (d + 1) + j] -= f * v;
                    }
                }
            }
        }
    }
    let mut pi: Vec<F> = (0..d).map(|i| a[i * (d + 1) + d] / a[i * (d + 1) + i]).collect();
    for p in pi.iter_mut() {
        *p = p.max(F::zero());
    }
    let s: F = pi.iter().copied().sum();
    for p in pi.iter_mut() {
        *p /= s;
    }
    let fixed_tol = F::lit(1e-10).max(F::structural_tol());
    for j in 0..d {
        let v: F = (0..d).map(|i| pi[i] * transition[i][j]).sum();
        if (v - pi[j]).abs() > fixed_tol {
            return Err(validation("stationary solve did not reach a fixed point"));
        }
    }
    if pi.iter().any(|p| *p <= F::zero()) {
        return Err(validation("stationary distribution has a zero entry"));
    }
    Ok(pi)
}

/// Pre-change `(p_inf, f_inf)` and post-change `(p_0, f_0)` regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePair<F = f64> {
    pub pre: HmmSpec<F>,
    pub post: HmmSpec<F>,
}

impl<F: Scalar> RegimePair<F> {
    pub fn new(pre: HmmSpec<F>, post: HmmSpec<F>) -> Result<Self> {
        if pre.num_states() != post.num_states() {
            return Err(validation(format!(
                "pre has {} states, post has {}",
                pre.num_states(),
                post.num_states()
            )));
        }
        if pre.emission().kind() != post.emission().kind() {
            return Err(validation("pre and post use different emission families"));
        }
        Ok(Self { pre, post })
    }

    pub fn spec(&self, regime: Regime) -> &HmmSpec<F> {
        match regime {
            Regime::Pre => &self.pre,
            Regime::Post => &self.post,
        }
    }

    pub fn num_states(&self) -> usize {
        self.pre.num_states()
    }

    /// Identical regimes: detection has zero information.
    pub fn is_degenerate(&self) -> bool {
        self.pre == self.post
    }

    /// Both regimes emit state-independent Bernoulli variables, so the
    /// log-likelihood ratio takes values on a lattice.
    pub fn is_lattice(&self) -> bool {
        matches!(self.pre.emission().kind(), EmissionKind::Bernoulli)
            && self.pre.emission().is_state_independent()
            && self.post.emission().is_state_independent()
    }
}

/// Observation path with a planted change point.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<F = f64> {
    pub observations: Vec<F>,
    pub hidden_states: Vec<usize>,
    /// `None` means no change (`nu = infinity`).
    pub change_point: Option<usize>,
    pub seed: u64,
}

/// Incremental generator of `(x_n, y_n)` for `n = 0, 1, ...`.
///
/// The hidden chain continues across the change: `x_nu` is drawn from the
/// post-change kernel started at `x_{nu-1}`. With `nu = 0` the whole path,
/// including `(x_0, y_0)`, comes from the post regime.
#[derive(Debug, Clone)]
pub struct PathSampler<'a, F = f64> {
    pair: &'a RegimePair<F>,
    change_point: Option<usize>,
    next_index: usize,
    last: Option<(usize, F)>,
}

impl<'a, F: Scalar> PathSampler<'a, F> {
    pub fn new(pair: &'a RegimePair<F>, change_point: Option<usize>) -> Self {
        Self {
            pair,
            change_point,
            next_index: 0,
            last: None,
        }
    }

    pub fn next_index(&self) -> usize {
        self.next_index
    }

    pub fn regime_at(&self, n: usize) -> Regime {
        match self.change_point {
            Some(nu) if n >= nu => Regime::Post,
            _ => Regime::Pre,
        }
    }

    pub fn next(&mut self, rng: &mut SimRng) -> (usize, F) {
        let n = self.next_index;
        let spec = self.pair.spec(self.regime_at(n));
        let (x, y) = match self.last {
            None => {
                let x = spec.sample_initial_state(rng);
                (x, spec.emission().sample(x, None, rng))
            }
            Some((x_prev, y_prev)) => {
                let x = spec.sample_next_state(x_prev, rng);
                (x, spec.emission().sample(x, Some(y_prev), rng))
            }
        };
        self.last = Some((x, y));
        self.next_index += 1;
        (x, y)
    }
}

/// Samples `y_0 .. y_N` with change point `nu` (`None` for no change).
pub fn sample_path<F: Scalar>(
    pair: &RegimePair<F>,
    change_point: Option<usize>,
    horizon: usize,
    seed: u64,
) -> Result<SamplePath<F>> {
    if horizon < 1 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    if let Some(nu) = change_point {
        if nu > horizon {
            return Err(Error::Argument(format!("change point {nu} beyond horizon {horizon}")));
        }
    }
    let mut rng = substream(seed, 0);
    let mut sampler = PathSampler::new(pair, change_point);
    let mut observations = Vec::with_capacity(horizon + 1);
    let mut hidden_states = Vec::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        let (x, y) = sampler.next(&mut rng);
        hidden_states.push(x);
        observations.push(y);
    }
    Ok(SamplePath {
        observations,
        hidden_states,
        change_point,
        seed,
    })
}
