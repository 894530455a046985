use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detectors::DetectorKind;
use crate::error::{Error, Result};
use crate::hmm::{EmissionFamily, HmmSpec, RegimePair};
use crate::likelihood::LlrMode;
use crate::priors::{ChangePointPrior, Tail};
use crate::scalar::Scalar;

/// Thresholds to evaluate: explicit values, or the analytic threshold for a
/// target false-alarm level.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSpec<F = f64> {
    List(Vec<F>),
    TargetAlpha(F),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings<F = f64> {
    pub reps: usize,
    pub horizon: usize,
    pub seed: u64,
    pub llr_mode: LlrMode,
    pub delta_correction: bool,
    /// Highest delay moment estimated (at least 1).
    pub moments: usize,
    /// False-alarm runs stop once `P(nu > n)` drops to this level.
    pub pfa_tail_tol: F,
    pub kl_steps: usize,
    pub b_grid: Vec<F>,
    pub eta_tail_tol: F,
    pub eta_run_length: usize,
    pub poisson_horizon: usize,
    pub burn_in: usize,
    /// SLLN band half-width; `None` means a quarter of the estimated information.
    pub slln_epsilon: Option<F>,
    pub slln_n_max: usize,
    /// Candidate change point `k` for the SLLN diagnostic.
    pub change_point: usize,
    pub calibrate_max_iter: usize,
}

impl<F: Scalar> Default for RunSettings<F> {
    fn default() -> Self {
        RunSection::default().build().expect("defaults are valid")
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<F = f64> {
    pub pair: RegimePair<F>,
    pub prior: ChangePointPrior<F>,
    pub detector: DetectorKind<F>,
    pub thresholds: ThresholdSpec<F>,
    pub run: RunSettings<F>,
}

impl<F: Scalar> ExperimentConfig<F> {
    pub fn new(
        pair: RegimePair<F>,
        prior: ChangePointPrior<F>,
        detector: DetectorKind<F>,
        thresholds: ThresholdSpec<F>,
        run: RunSettings<F>,
    ) -> Result<Self> {
        let cfg = Self {
            pair,
            prior,
            detector,
            thresholds,
            run,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.reps < 1 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.run.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.run.moments < 1 {
            return Err(Error::Config("moments must be at least 1".into()));
        }
        match &self.thresholds {
            ThresholdSpec::List(v) => {
                if v.is_empty() {
                    return Err(Error::Config("threshold list is empty".into()));
                }
                if v.iter().any(|t| !(t.is_finite() && *t > F::zero())) {
                    return Err(Error::Config("thresholds must be positive and finite".into()));
                }
            }
            ThresholdSpec::TargetAlpha(a) => {
                if !(*a > F::zero() && *a < F::one()) {
                    return Err(Error::Config("target_alpha must lie in (0, 1)".into()));
                }
            }
        }
        if self.run.b_grid.is_empty() || self.run.b_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("b_grid must be nonempty and strictly increasing".into()));
        }
        Ok(())
    }

    /// Thresholds in ascending order.
    pub fn resolved_thresholds(&self) -> Result<Vec<F>> {
        let mut v = match &self.thresholds {
            ThresholdSpec::List(v) => v.clone(),
            ThresholdSpec::TargetAlpha(a) => vec![self.detector.analytic_threshold(&self.prior, *a)?],
        };
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        v.dedup();
        Ok(v)
    }

    pub fn with_thresholds(mut self, thresholds: Vec<F>) -> Self {
        self.thresholds = ThresholdSpec::List(thresholds);
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.run.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.run.horizon = horizon;
        self
    }
}

// ---- file format ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionName {
    Gaussian,
    Bernoulli,
    Ar1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub transition: Vec<Vec<f64>>,
    pub emission: EmissionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_devs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub pre: RegimeSection,
    pub post: RegimeSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorName {
    Geometric,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub kind: PriorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorName {
    Shiryaev,
    Gsr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub kind: DetectorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_start: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlrModeName {
    Exact,
    Restart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub reps: usize,
    pub horizon: usize,
    pub seed: u64,
    pub llr_mode: LlrModeName,
    pub delta_correction: bool,
    pub moments: usize,
    pub pfa_tail_tol: f64,
    pub kl_steps: usize,
    pub b_grid: Vec<f64>,
    pub eta_tail_tol: f64,
    pub eta_run_length: usize,
    pub poisson_horizon: usize,
    pub burn_in: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slln_epsilon: Option<f64>,
    pub slln_n_max: usize,
    pub change_point: usize,
    pub calibrate_max_iter: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            reps: 10_000,
            horizon: 100_000,
            seed: 1,
            llr_mode: LlrModeName::Exact,
            delta_correction: false,
            moments: 2,
            pfa_tail_tol: 1e-14,
            kl_steps: 200_000,
            b_grid: vec![160.0, 240.0, 320.0],
            eta_tail_tol: 1e-12,
            eta_run_length: 10,
            poisson_horizon: 200,
            burn_in: 200,
            slln_epsilon: None,
            slln_n_max: 500,
            change_point: 1,
            calibrate_max_iter: 40,
        }
    }
}

/// Parsed configuration file, before conversion to a scalar type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub prior: PriorSection,
    pub detector: DetectorSection,
    #[serde(default)]
    pub run: RunSection,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn lits<F: Scalar>(v: &[f64]) -> Vec<F> {
    v.iter().map(|&x| F::lit(x)).collect()
}

impl RegimeSection {
    fn build<F: Scalar>(&self, name: &str) -> Result<HmmSpec<F>> {
        let unexpected = |keys: &[(&str, bool)]| -> Result<()> {
            for (k, present) in keys {
                if *present {
                    return Err(cfg_err(format!(
                        "model.{name}: key `{k}` does not apply to emission `{:?}`",
                        self.emission
                    )));
                }
            }
            Ok(())
        };
        let need = |v: &Option<Vec<f64>>, key: &str| -> Result<Vec<f64>> {
            v.clone()
                .ok_or_else(|| cfg_err(format!("model.{name}: missing key `{key}`")))
        };
        let emission = match self.emission {
            EmissionName::Gaussian => {
                unexpected(&[("success", self.success.is_some()), ("coeffs", self.coeffs.is_some())])?;
                let means = need(&self.means, "means")?;
                let std_devs = match &self.std_devs {
                    Some(s) => s.clone(),
                    None => vec![1.0; means.len()],
                };
                EmissionFamily::Gaussian {
                    means: lits(&means),
                    std_devs: lits(&std_devs),
                }
            }
            EmissionName::Bernoulli => {
                unexpected(&[
                    ("means", self.means.is_some()),
                    ("std_devs", self.std_devs.is_some()),
                    ("coeffs", self.coeffs.is_some()),
                ])?;
                EmissionFamily::Bernoulli {
                    success: lits(&need(&self.success, "success")?),
                }
            }
            EmissionName::Ar1 => {
                unexpected(&[
                    ("means", self.means.is_some()),
                    ("std_devs", self.std_devs.is_some()),
                    ("success", self.success.is_some()),
                ])?;
                EmissionFamily::Ar1 {
                    coeffs: lits(&need(&self.coeffs, "coeffs")?),
                }
            }
        };
        let transition = self.transition.iter().map(|r| lits(r)).collect();
        HmmSpec::new(transition, emission)
    }
}

impl PriorSection {
    pub fn geometric(omega0: f64, rho: f64) -> Self {
        Self {
            kind: PriorName::Geometric,
            omega0: Some(omega0),
            rho: Some(rho),
            weights: None,
            tail_rho: None,
            truncated: None,
        }
    }

    fn build<F: Scalar>(&self) -> Result<ChangePointPrior<F>> {
        match self.kind {
            PriorName::Geometric => {
                if self.weights.is_some() || self.tail_rho.is_some() || self.truncated.is_some() {
                    return Err(cfg_err("prior: geometric prior takes only `omega0` and `rho`"));
                }
                let rho = self.rho.ok_or_else(|| cfg_err("prior: missing key `rho`"))?;
                ChangePointPrior::geometric(F::lit(self.omega0.unwrap_or(0.0)), F::lit(rho))
            }
            PriorName::Tabulated => {
                if self.omega0.is_some() || self.rho.is_some() {
                    return Err(cfg_err("prior: tabulated prior takes `weights` with `tail_rho` or `truncated`"));
                }
                let w = self.weights.as_ref().ok_or_else(|| cfg_err("prior: missing key `weights`"))?;
                let tail = match (self.tail_rho, self.truncated.unwrap_or(false)) {
                    (Some(_), true) => return Err(cfg_err("prior: `tail_rho` and `truncated = true` conflict")),
                    (Some(r), false) => Tail::Geometric { rho: F::lit(r) },
                    (None, true) => Tail::Truncated,
                    (None, false) => return Err(cfg_err("prior: tabulated prior needs `tail_rho` or `truncated = true`")),
                };
                ChangePointPrior::tabulated(lits(w), tail)
            }
        }
    }
}

impl RunSection {
    fn build<F: Scalar>(&self) -> Result<RunSettings<F>> {
        Ok(RunSettings {
            reps: self.reps,
            horizon: self.horizon,
            seed: self.seed,
            llr_mode: match self.llr_mode {
                LlrModeName::Exact => LlrMode::Exact,
                LlrModeName::Restart => LlrMode::Restart,
            },
            delta_correction: self.delta_correction,
            moments: self.moments,
            pfa_tail_tol: F::lit(self.pfa_tail_tol),
            kl_steps: self.kl_steps,
            b_grid: lits(&self.b_grid),
            eta_tail_tol: F::lit(self.eta_tail_tol),
            eta_run_length: self.eta_run_length.max(1),
            poisson_horizon: self.poisson_horizon,
            burn_in: self.burn_in,
            slln_epsilon: self.slln_epsilon.map(F::lit),
            slln_n_max: self.slln_n_max,
            change_point: self.change_point,
            calibrate_max_iter: self.calibrate_max_iter,
        })
    }
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn build<F: Scalar>(&self) -> Result<ExperimentConfig<F>> {
        let pre = self.model.pre.build("pre")?;
        let post = self.model.post.build("post")?;
        let pair = RegimePair::new(pre, post)?;
        let prior = self.prior.build()?;
        let detector = match self.detector.kind {
            DetectorName::Shiryaev => {
                if self.detector.head_start.is_some() {
                    return Err(cfg_err("detector: `head_start` applies only to gsr"));
                }
                DetectorKind::Shiryaev
            }
            DetectorName::Gsr => DetectorKind::Gsr {
                head_start: F::lit(self.detector.head_start.unwrap_or(0.0)),
            },
        };
        let thresholds = match (&self.detector.thresholds, self.detector.target_alpha) {
            (Some(_), Some(_)) => return Err(cfg_err("detector: give either `thresholds` or `target_alpha`")),
            (Some(t), None) => ThresholdSpec::List(lits(t)),
            (None, Some(a)) => ThresholdSpec::TargetAlpha(F::lit(a)),
            (None, None) => return Err(cfg_err("detector: missing `thresholds` or `target_alpha`")),
        };
        ExperimentConfig::new(pair, prior, detector, thresholds, self.run.build()?)
    }
}
