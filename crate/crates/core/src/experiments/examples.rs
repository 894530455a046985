//! The three worked examples: Bernoulli track management, a two-state
//! Gaussian HMM and a change of correlation in an AR(1) model.

use crate::error::{Error, Result};
use crate::hmm::{kl_information, sample_path, HmmSpec};
use crate::likelihood::{llr_stream, FilterState};
use crate::rng::{derive_seed, tags};
use crate::{Regime, RegimePair};

use super::config::{
    ConfigFile, DetectorName, DetectorSection, EmissionName, ModelSection, PriorSection, RegimeSection,
    RunSection,
};
use super::{simulate, OperatingCharacteristic};

fn regime(transition: Vec<Vec<f64>>, emission: EmissionName) -> RegimeSection {
    RegimeSection {
        transition,
        emission,
        means: None,
        std_devs: None,
        success: None,
        coeffs: None,
    }
}

fn base(model: ModelSection) -> ConfigFile {
    ConfigFile {
        model,
        prior: PriorSection::geometric(0.0, 0.1),
        detector: DetectorSection {
            kind: DetectorName::Shiryaev,
            thresholds: Some(vec![9.0, 99.0, 999.0]),
            target_alpha: None,
            head_start: None,
        },
        run: RunSection::default(),
    }
}

/// Two-state chain with `P(2 -> 1) = p`, `P(1 -> 2) = q`.
pub fn two_state_transition(p: f64, q: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - q, q], vec![p, 1.0 - p]]
}

/// Example 1: detection probabilities `pd` per state before the change,
/// i.i.d. false-alarm probability `pfa` after.
pub fn example1(p: f64, q: f64, pd: [f64; 2], pfa: f64) -> ConfigFile {
    let t = two_state_transition(p, q);
    let mut pre = regime(t.clone(), EmissionName::Bernoulli);
    pre.success = Some(pd.to_vec());
    let mut post = regime(t, EmissionName::Bernoulli);
    post.success = Some(vec![pfa, pfa]);
    base(ModelSection { pre, post })
}

/// Example 2: unit-variance Gaussian emissions with per-state means.
pub fn example2(transition: Vec<Vec<f64>>, pre_means: [f64; 2], post_means: [f64; 2]) -> ConfigFile {
    let mut pre = regime(transition.clone(), EmissionName::Gaussian);
    pre.means = Some(pre_means.to_vec());
    let mut post = regime(transition, EmissionName::Gaussian);
    post.means = Some(post_means.to_vec());
    base(ModelSection { pre, post })
}

/// Example 3: AR(1) coefficient `a0` before the change, state-dependent
/// coefficients `post` after, driven by `transition`.
pub fn example3(a0: f64, post: Vec<f64>, transition: Vec<Vec<f64>>) -> ConfigFile {
    let d = post.len();
    let mut pre = regime(transition.clone(), EmissionName::Ar1);
    pre.coeffs = Some(vec![a0; d]);
    let mut post_s = regime(transition, EmissionName::Ar1);
    post_s.coeffs = Some(post);
    base(ModelSection { pre, post: post_s })
}

/// Default configuration of example `id`.
pub fn example_config(id: u8) -> Result<ConfigFile> {
    match id {
        1 => Ok(example1(0.2, 0.1, [0.9, 0.5], 0.1)),
        2 => Ok(example2(vec![vec![0.9, 0.1], vec![0.2, 0.8]], [0.0, 2.0], [1.0, 3.0])),
        3 => Ok(example3(0.0, vec![0.5], vec![vec![1.0]])),
        _ => Err(Error::Argument(format!("unknown example {id}; expected 1, 2 or 3"))),
    }
}

/// `log Lambda_n`, `n = 1..`, for example 1 through the explicit
/// prediction/posterior recursion.
pub fn example1_log_lambdas(p: f64, q: f64, pd: [f64; 2], pfa: f64, ys: &[f64]) -> Vec<f64> {
    let g = |l: usize, y: f64| if y == 1.0 { pd[l] } else { 1.0 - pd[l] };
    let f = |y: f64| if y == 1.0 { pfa } else { 1.0 - pfa };
    // posterior at time 0 from the stationary prior
    let pi1 = p / (p + q);
    let mut post = [pi1 * g(0, ys[0]), (1.0 - pi1) * g(1, ys[0])];
    let s = post[0] + post[1];
    post = [post[0] / s, post[1] / s];
    let mut out = Vec::with_capacity(ys.len().saturating_sub(1));
    for &y in &ys[1..] {
        let pred = [post[0] * (1.0 - q) + post[1] * p, post[1] * (1.0 - p) + post[0] * q];
        let pinf = g(0, y) * pred[0] + g(1, y) * pred[1];
        out.push((f(y) / pinf).ln());
        post = [g(0, y) * pred[0] / pinf, g(1, y) * pred[1] / pinf];
    }
    out
}

/// `log p(Y_1..Y_n)` for a two-state unit-variance Gaussian chain using the
/// joint-probability recursions started from the stationary law. The pair is
/// rescaled only when it approaches underflow.
pub fn example2_log_likelihood(transition: &[Vec<f64>], means: [f64; 2], ys: &[f64]) -> f64 {
    let phi = |y: f64, m: f64| (-0.5 * (y - m) * (y - m)).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let p12 = transition[0][1];
    let p21 = transition[1][0];
    let (p11, p22) = (1.0 - p12, 1.0 - p21);
    let pi2 = p12 / (p12 + p21);
    // big = P(., X_n = 2), small = P(., X_n = 1)
    let mut big = pi2;
    let mut small = 1.0 - pi2;
    let mut log_scale = 0.0;
    for &y in ys {
        let nb = (big * p22 + small * p12) * phi(y, means[1]);
        let ns = (big * p21 + small * p11) * phi(y, means[0]);
        big = nb;
        small = ns;
        let m = big.max(small);
        if m < 1e-200 {
            big /= m;
            small /= m;
            log_scale += m.ln();
        }
    }
    log_scale + (big + small).ln()
}

/// Outcome of a built-in consistency check.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ExampleReport {
    pub id: u8,
    pub config: ConfigFile,
    pub results: Vec<OperatingCharacteristic<f64>>,
    pub checks: Vec<CrossCheck>,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Generic-filter `log p(Y_1..Y_n)` started from the stationary law without the time-0 emission.
fn filter_log_likelihood(spec: &HmmSpec, ys: &[f64]) -> Result<f64> {
    let mut f = FilterState::from_weights(spec.stationary().to_vec(), 0.0, 0);
    for &y in ys {
        f.advance(spec, Regime::Pre, y)?;
    }
    Ok(f.log_norm)
}

/// Runs the cross-checks attached to example `id` against `config`.
pub fn example_checks(id: u8, config: &ConfigFile, seed: u64) -> Result<Vec<CrossCheck>> {
    let cfg = config.build::<f64>()?;
    let pair: &RegimePair = &cfg.pair;
    let mut checks = Vec::new();
    match id {
        1 => {
            let t = &config.model.pre.transition;
            let (p, q) = (t[1][0], t[0][1]);
            let pd = config.model.pre.success.clone().unwrap_or_default();
            let pfa = config.model.post.success.clone().unwrap_or_default();
            if pd.len() == 2 && pfa.len() == 2 && pfa[0] == pfa[1] && t == &config.model.post.transition {
                let path = sample_path(pair, Some(100), 200, seed)?;
                let generic = llr_stream(pair, &path.observations)?;
                let special = example1_log_lambdas(p, q, [pd[0], pd[1]], pfa[0], &path.observations);
                let gap = generic
                    .increments
                    .iter()
                    .zip(&special)
                    .map(|(a, b)| rel_gap(*a, *b))
                    .fold(0.0, f64::max);
                checks.push(CrossCheck {
                    name: "prediction/posterior recursion vs matrix filter".into(),
                    passed: gap <= 1e-9,
                    detail: format!("max relative gap {gap:e} over 200 steps"),
                });
            }
        }
        2 => {
            let path = sample_path(pair, Some(100), 200, seed)?;
            let ys = &path.observations[1..];
            let mut worst: f64 = 0.0;
            for (spec, sec) in [(&pair.pre, &config.model.pre), (&pair.post, &config.model.post)] {
                if spec.num_states() != 2 {
                    continue;
                }
                let m = sec.means.clone().unwrap_or_default();
                let rec = example2_log_likelihood(&sec.transition, [m[0], m[1]], ys);
                worst = worst.max(rel_gap(filter_log_likelihood(spec, ys)?, rec));
            }
            checks.push(CrossCheck {
                name: "joint-probability recursions vs matrix filter".into(),
                passed: worst <= 1e-9,
                detail: format!("max relative gap {worst:e} over 200 steps"),
            });
        }
        3 => {
            let pre = config.model.pre.coeffs.clone().unwrap_or_default();
            let post = config.model.post.coeffs.clone().unwrap_or_default();
            if post.len() == 1 {
                let (a0, a) = (pre[0], post[0]);
                let closed = (a - a0).powi(2) / (2.0 * (1.0 - a * a));
                let est = kl_information(pair, 1_000_000, derive_seed(seed, tags::KL))?;
                let rel = (est.mean - closed).abs() / closed;
                checks.push(CrossCheck {
                    name: "information number vs closed form".into(),
                    passed: rel <= 0.02,
                    detail: format!("estimate {:.6} +- {:.6}, closed form {closed:.6}", est.mean, est.std_error),
                });
            }
        }
        _ => return Err(Error::Argument(format!("unknown example {id}"))),
    }
    Ok(checks)
}

/// Builds example `id`, applies `adjust` to its configuration, estimates
/// operating characteristics and runs the example's cross-checks.
pub fn run_example(id: u8, adjust: impl FnOnce(&mut ConfigFile)) -> Result<ExampleReport> {
    let mut config = example_config(id)?;
    adjust(&mut config);
    let cfg = config.build::<f64>()?;
    let results = simulate(&cfg)?;
    let checks = example_checks(id, &config, cfg.run.seed)?;
    Ok(ExampleReport {
        id,
        config,
        results,
        checks,
    })
}
