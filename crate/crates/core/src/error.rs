use std::fmt;

use thiserror::Error;

/// Which of the two regimes a filter or matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Pre-change (normal) regime, `(p_inf, f_inf)`.
    Pre,
    /// Post-change (abnormal) regime, `(p_0, f_0)`.
    Post,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Pre => f.write_str("pre"),
            Regime::Post => f.write_str("post"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("model validation failed: {0}")]
    ModelValidation(String),

    #[error("observation {observation} has zero density under the {regime} regime at step {step}")]
    ZeroDensity {
        regime: Regime,
        step: usize,
        observation: f64,
    },

    #[error("non-finite value at step {step} (observation {observation}): {message}")]
    NumericalDomain {
        step: usize,
        observation: f64,
        message: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("prior exhausted: P(nu > {n}) = 0")]
    ExhaustedPrior { n: usize },

    #[error("alpha = {alpha} is not below 1 - omega_0 = {limit}; stopping immediately is trivially optimal")]
    TrivialSolution { alpha: f64, limit: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("threshold calibration failed after {iterations} iterations; best bracket on A is [{lo}, {hi}]")]
    Calibration { iterations: usize, lo: f64, hi: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("diagnostic check failed: {0}")]
    Diagnostics(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ModelValidation(_) => "model-validation",
            Error::ZeroDensity { .. } => "zero-density",
            Error::NumericalDomain { .. } => "numerical-domain",
            Error::Argument(_) => "argument",
            Error::ExhaustedPrior { .. } => "exhausted-prior",
            Error::TrivialSolution { .. } => "trivial-solution",
            Error::DegenerateModel(_) => "degenerate-model",
            Error::Calibration { .. } => "calibration",
            Error::Estimation(_) => "estimation",
            Error::Diagnostics(_) => "diagnostics",
            Error::Config(_) => "config",
            Error::Replication { source, .. } => source.category(),
            Error::Io(_) => "io",
            Error::Csv(_) => "io",
        }
    }

    pub(crate) fn in_replication(self, index: usize) -> Error {
        match self {
            e @ Error::Replication { .. } => e,
            e => Error::Replication {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
