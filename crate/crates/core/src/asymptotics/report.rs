use std::path::Path;

use crate::detectors::DetectorKind;
use crate::error::{Error, Result};
use crate::estimate::McEstimate;
use crate::experiments::ExperimentConfig;
use crate::hmm::kl_information;
use crate::priors::TailExponent;
use crate::rng::{derive_seed, tags};
use crate::scalar::Scalar;

use super::{
    estimate_eta_constant, estimate_overshoot, estimate_poisson_correction, first_order_add,
    ho_add_gsr, ho_add_shiryaev, ho_pfa, EtaConstant, EtaOptions, HoAdd, OvershootConstants,
    PoissonCorrection, PoissonOptions,
};

pub const CONSTANTS_HEADER: &str = "quantity,threshold,value,std_error";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow<F = f64> {
    pub threshold: F,
    /// First-order delay moments, `m = 1, 2, ...`.
    pub first_order: Vec<F>,
    pub ho_pfa: Option<McEstimate<F>>,
    pub ho_add: Option<HoAdd<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport<F = f64> {
    pub detector: &'static str,
    pub information: McEstimate<F>,
    pub tail_exponent: TailExponent<F>,
    /// Geometric parameter used by the higher-order terms (zero for GSR).
    pub rho: Option<F>,
    pub overshoot: Option<OvershootConstants<F>>,
    pub eta: Option<EtaConstant<F>>,
    pub poisson: Option<PoissonCorrection<F>>,
    pub rows: Vec<PredictionRow<F>>,
    pub warnings: Vec<String>,
}

impl<F: Scalar> AsymptoticReport<F> {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CONSTANTS_HEADER.split(','))?;
        let mut put = |q: &str, thr: Option<F>, v: F, se: Option<F>| -> Result<()> {
            let thr = thr.map(|t| t.to_string()).unwrap_or_default();
            let se = se.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([q, &thr, &v.to_string(), &se])?;
            Ok(())
        };
        put("kl", None, self.information.mean, Some(self.information.std_error))?;
        put("tail_exponent", None, self.tail_exponent.value, None)?;
        if let Some(rho) = self.rho {
            put("rho", None, rho, None)?;
        }
        if let Some(o) = &self.overshoot {
            put("zeta", None, o.zeta.mean, Some(o.zeta.std_error))?;
            put("mean_overshoot", None, o.mean_overshoot.mean, Some(o.mean_overshoot.std_error))?;
            put("overshoot_drift", None, o.drift, None)?;
        }
        if let Some(e) = &self.eta {
            put("eta", None, e.value.mean, Some(e.value.std_error))?;
        }
        if let Some(p) = &self.poisson {
            put("delta_w", None, p.delta_at_w.mean, Some(p.delta_at_w.std_error))?;
            put("integral_delta", None, p.integral_term.mean, Some(p.integral_term.std_error))?;
        }
        for row in &self.rows {
            let t = Some(row.threshold);
            for (m, v) in row.first_order.iter().enumerate() {
                put(&format!("first_order_m{}", m + 1), t, *v, None)?;
            }
            if let Some(p) = &row.ho_pfa {
                put("ho_pfa", t, p.mean, Some(p.std_error))?;
            }
            if let Some(a) = &row.ho_add {
                let name = if a.delta_included { "ho_add" } else { "ho_add_without_delta" };
                put(name, t, a.value, Some(a.std_error))?;
            }
        }
        drop(put);
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Estimation(e.to_string()))
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// First-order predictions for every threshold and, where the prior allows,
/// higher-order ones with their simulated constants.
pub fn asymptotic_report<F: Scalar>(config: &ExperimentConfig<F>) -> Result<AsymptoticReport<F>> {
    config.validate()?;
    if config.pair.is_degenerate() {
        return Err(Error::DegenerateModel("pre- and post-change models coincide".into()));
    }
    let run = &config.run;
    let thresholds = config.resolved_thresholds()?;
    let information = kl_information(&config.pair, run.kl_steps, derive_seed(run.seed, tags::KL))?;
    let tail_exponent = config.prior.tail_exponent();
    let mut warnings = Vec::new();
    if config.pair.is_lattice() {
        warnings.push("log-likelihood ratio is lattice; higher-order terms assume a nonarithmetic walk".to_string());
    }
    if tail_exponent.estimated {
        warnings.push("tail exponent estimated from tabulated prior".to_string());
    }
    let (c, rho, r0) = match &config.detector {
        DetectorKind::Shiryaev => {
            let rho = config.prior.geometric_rho();
            let w0 = config.prior.omega0();
            let r0 = rho.map(|r| w0 / ((F::one() - w0) * r));
            (tail_exponent.value, rho, r0)
        }
        DetectorKind::Gsr { head_start } => (F::zero(), Some(F::zero()), Some(*head_start)),
    };
    if rho.is_none() {
        warnings.push("prior is not geometric; only first-order predictions are available".to_string());
    }
    let mut rows = Vec::with_capacity(thresholds.len());
    let mut overshoot = None;
    let mut eta = None;
    let mut poisson = None;
    if let (Some(rho), Some(r0)) = (rho, r0) {
        let o = estimate_overshoot(&config.pair, rho, &run.b_grid, run.reps, run.seed)?;
        if !o.stabilized {
            warnings.push(format!("overshoot estimates drift across b_grid (drift {})", o.drift));
        }
        let eta_opts = EtaOptions { r0, tail_tol: run.eta_tail_tol, run_length: run.eta_run_length, ..EtaOptions::default() };
        let e = estimate_eta_constant(&config.pair, rho, run.reps, &eta_opts, run.seed)?;
        let p_opts = PoissonOptions {
            start: super::PoissonStart::Fresh,
            horizon: run.poisson_horizon,
            burn_in: run.burn_in,
            reps: run.reps,
            enabled: run.delta_correction,
        };
        let p = estimate_poisson_correction(&config.pair, rho, &p_opts, run.seed)?;
        if !p.horizon_adequate {
            warnings.push(format!("Poisson correction not settled at horizon {}", p.horizon));
        }
        overshoot = Some(o);
        eta = Some(e);
        poisson = Some(p);
    }
    for &threshold in &thresholds {
        let log_thr = threshold.ln();
        let first_order = (1..=run.moments.max(1) as u32)
            .map(|m| first_order_add(information.mean, c, log_thr, m))
            .collect::<Result<Vec<_>>>()?;
        let (mut pfa, mut add) = (None, None);
        if let (Some(o), Some(e), Some(p)) = (&overshoot, &eta, &poisson) {
            match &config.detector {
                DetectorKind::Shiryaev => {
                    let rho = rho.unwrap_or_else(F::zero);
                    pfa = Some(ho_pfa(threshold, &o.zeta));
                    add = Some(ho_add_shiryaev(threshold, rho, &information, &e.value, &o.mean_overshoot, Some(p))?);
                }
                DetectorKind::Gsr { .. } => {
                    add = Some(ho_add_gsr(threshold, &information, &e.value, &o.mean_overshoot, Some(p))?);
                }
            }
        }
        rows.push(PredictionRow { threshold, first_order, ho_pfa: pfa, ho_add: add });
    }
    Ok(AsymptoticReport {
        detector: config.detector.name(),
        information,
        tail_exponent,
        rho,
        overshoot,
        eta,
        poisson,
        rows,
        warnings,
    })
}
