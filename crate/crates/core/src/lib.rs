//! Bayesian quickest change-point detection for hidden Markov models.
//!
//! The crate provides the Shiryaev and generalized Shiryaev-Roberts stopping
//! rules driven by log-domain HMM likelihood filters, Monte Carlo estimators
//! of their false-alarm probability and detection-delay moments, and
//! first-order and higher-order asymptotic approximations with simulated
//! renewal constants.
//!
//! All numerical types are generic over [`Scalar`] (`f32` or `f64`, default
//! `f64`); the `*32` and `*64` aliases below name the concrete instances.

pub mod asymptotics;
pub mod detectors;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod hmm;
pub mod likelihood;
pub mod priors;
pub mod rng;
pub mod scalar;

pub use error::{Error, Regime, Result};
pub use estimate::McEstimate;
pub use hmm::{EmissionFamily, HmmSpec, RegimePair, SamplePath};
pub use likelihood::{FilterState, LlrMode};
pub use priors::ChangePointPrior;
pub use scalar::Scalar;

pub type HmmSpec64 = HmmSpec<f64>;
pub type HmmSpec32 = HmmSpec<f32>;
pub type RegimePair64 = RegimePair<f64>;
pub type RegimePair32 = RegimePair<f32>;
pub type FilterState64 = FilterState<f64>;
pub type FilterState32 = FilterState<f32>;
pub type Prior64 = ChangePointPrior<f64>;
pub type Prior32 = ChangePointPrior<f32>;
pub type ShiryaevDetector64 = detectors::ShiryaevDetector<f64>;
pub type ShiryaevDetector32 = detectors::ShiryaevDetector<f32>;
pub type GsrDetector64 = detectors::GsrDetector<f64>;
pub type GsrDetector32 = detectors::GsrDetector<f32>;
pub type McEstimate64 = McEstimate<f64>;
pub type McEstimate32 = McEstimate<f32>;
pub type ExperimentConfig64 = experiments::ExperimentConfig<f64>;
pub type ExperimentConfig32 = experiments::ExperimentConfig<f32>;
