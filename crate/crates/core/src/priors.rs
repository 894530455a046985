//! Prior laws of the change point `nu` on `{0, 1, 2, ...}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;

/// Behaviour of a tabulated prior beyond its last listed weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail<F = f64> {
    /// Remaining mass spread geometrically: `P(nu = K + j) = r rho (1-rho)^(j-1)`.
    Geometric { rho: F },
    /// No mass beyond the table; the weights must sum to one.
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind<F> {
    Geometric {
        omega0: F,
        rho: F,
    },
    Tabulated {
        weights: Vec<F>,
        /// `suffix[k] = sum_{j > k, j <= K} w_j + residual`, i.e. `P(nu > k)` for `k <= K`.
        suffix: Vec<F>,
        residual: F,
        tail: Tail<F>,
    },
}

/// Change-point prior with closed-form (geometric) or tabulated weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointPrior<F = f64> {
    kind: Kind<F>,
}

/// Tail exponent `c = lim -log P(nu > k) / k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailExponent<F = f64> {
    pub value: F,
    /// Windowed slope estimate rather than a closed form.
    pub estimated: bool,
}

impl<F: Scalar> ChangePointPrior<F> {
    /// Zero-modified geometric: `P(nu = 0) = omega0`, `P(nu = k) = (1-omega0) rho (1-rho)^(k-1)`.
    pub fn geometric(omega0: F, rho: F) -> Result<Self> {
        if !(omega0 >= F::zero() && omega0 < F::one()) {
            return Err(Error::Argument(format!("omega0 = {omega0} must lie in [0, 1)")));
        }
        if !(rho > F::zero() && rho < F::one()) {
            return Err(Error::Argument(format!("rho = {rho} must lie in (0, 1)")));
        }
        Ok(Self {
            kind: Kind::Geometric { omega0, rho },
        })
    }

    pub fn tabulated(weights: Vec<F>, tail: Tail<F>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Argument("tabulated prior needs at least one weight".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= F::zero())) {
            return Err(Error::Argument("prior weights must be finite and nonnegative".into()));
        }
        let total: F = weights.iter().copied().sum();
        let tol = F::structural_tol();
        let mut residual = F::one() - total;
        if residual < -tol {
            return Err(Error::Argument(format!("prior weights sum to {total} > 1")));
        }
        match tail {
            Tail::Truncated => {
                if residual.abs() > tol {
                    return Err(Error::Argument(format!(
                        "truncated prior has mass deficit {residual}; weights must sum to 1"
                    )));
                }
                residual = F::zero();
            }
            Tail::Geometric { rho } => {
                if !(rho > F::zero() && rho < F::one()) {
                    return Err(Error::Argument(format!("tail rho = {rho} must lie in (0, 1)")));
                }
                residual = residual.max(F::zero());
            }
        }
        let k = weights.len();
        let mut suffix = vec![F::zero(); k];
        let mut acc = residual;
        for i in (0..k).rev() {
            suffix[i] = acc;
            acc += weights[i];
        }
        Ok(Self {
            kind: Kind::Tabulated {
                weights,
                suffix,
                residual,
                tail,
            },
        })
    }

    /// Point mass at `k`.
    pub fn point_mass(k: usize) -> Result<Self> {
        let mut w = vec![F::zero(); k + 1];
        w[k] = F::one();
        Self::tabulated(w, Tail::Truncated)
    }

    pub fn omega0(&self) -> F {
        match &self.kind {
            Kind::Geometric { omega0, .. } => *omega0,
            Kind::Tabulated { weights, .. } => weights[0],
        }
    }

    /// `rho` for zero-modified geometric priors.
    pub fn geometric_rho(&self) -> Option<F> {
        match &self.kind {
            Kind::Geometric { rho, .. } => Some(*rho),
            Kind::Tabulated { .. } => None,
        }
    }

    pub fn pmf(&self, k: usize) -> F {
        match &self.kind {
            Kind::Geometric { omega0, rho } => {
                if k == 0 {
                    *omega0
                } else {
                    (F::one() - *omega0) * *rho * (F::one() - *rho).powi(k as i32 - 1)
                }
            }
            Kind::Tabulated { weights, residual, tail, .. } => {
                if k < weights.len() {
                    weights[k]
                } else {
                    match tail {
                        Tail::Truncated => F::zero(),
                        Tail::Geometric { rho } => {
                            let j = k + 1 - weights.len();
                            *residual * *rho * (F::one() - *rho).powi(j as i32 - 1)
                        }
                    }
                }
            }
        }
    }

    /// `P(nu > k)`.
    pub fn survival(&self, k: usize) -> F {
        self.log_survival(k).exp()
    }

    pub fn log_pmf(&self, k: usize) -> F {
        match &self.kind {
            Kind::Geometric { omega0, rho } => {
                if k == 0 {
                    omega0.ln()
                } else {
                    (F::one() - *omega0).ln() + rho.ln() + F::from_usize_lossy(k - 1) * (-*rho).ln_1p()
                }
            }
            Kind::Tabulated { weights, residual, tail, .. } => {
                if k < weights.len() {
                    weights[k].ln()
                } else {
                    match tail {
                        Tail::Truncated => F::neg_infinity(),
                        Tail::Geometric { rho } => {
                            let j = k + 1 - weights.len();
                            residual.ln() + rho.ln() + F::from_usize_lossy(j - 1) * (-*rho).ln_1p()
                        }
                    }
                }
            }
        }
    }

    pub fn log_survival(&self, k: usize) -> F {
        match &self.kind {
            Kind::Geometric { omega0, rho } => {
                (F::one() - *omega0).ln() + F::from_usize_lossy(k) * (-*rho).ln_1p()
            }
            Kind::Tabulated { weights, suffix, residual, tail } => {
                if k < weights.len() {
                    suffix[k].ln()
                } else {
                    match tail {
                        Tail::Truncated => F::neg_infinity(),
                        Tail::Geometric { rho } => {
                            let j = k + 1 - weights.len();
                            residual.ln() + F::from_usize_lossy(j) * (-*rho).ln_1p()
                        }
                    }
                }
            }
        }
    }

    /// `(omega_k, P(nu > k))`.
    pub fn eval(&self, k: usize) -> (F, F) {
        (self.pmf(k), self.survival(k))
    }

    /// `omega_{k,n} = omega_k / P(nu > n)` for `0 <= k <= n`.
    pub fn weight_kn(&self, k: usize, n: usize) -> Result<F> {
        if k > n {
            return Err(Error::Argument(format!("weight_kn needs k <= n, got {k} > {n}")));
        }
        let ls = self.log_survival(n);
        if ls == F::neg_infinity() {
            return Err(Error::ExhaustedPrior { n });
        }
        Ok((self.log_pmf(k) - ls).exp())
    }

    /// Exact `-log(1 - rho)` for geometric priors, otherwise a least-squares
    /// slope of `-log P(nu > k)` over the upper half of the informative range.
    pub fn tail_exponent(&self) -> TailExponent<F> {
        match &self.kind {
            Kind::Geometric { rho, .. } => TailExponent {
                value: -(-*rho).ln_1p(),
                estimated: false,
            },
            Kind::Tabulated { weights, residual, tail, .. } => {
                let kmax = weights.len();
                let hi = match tail {
                    Tail::Geometric { .. } if *residual > F::zero() => kmax + kmax.max(50),
                    _ => (0..kmax).rev().find(|&k| self.log_survival(k).is_finite()).unwrap_or(0),
                };
                let lo = hi / 2;
                TailExponent {
                    value: self.slope(lo, hi).max(F::zero()),
                    estimated: true,
                }
            }
        }
    }

    fn slope(&self, lo: usize, hi: usize) -> F {
        if hi <= lo {
            return F::zero();
        }
        let pts: Vec<(F, F)> = (lo..=hi)
            .map(|k| (F::from_usize_lossy(k), -self.log_survival(k)))
            .filter(|(_, v)| v.is_finite())
            .collect();
        if pts.len() < 2 {
            return F::zero();
        }
        let n = F::from_usize_lossy(pts.len());
        let mx = pts.iter().map(|p| p.0).sum::<F>() / n;
        let my = pts.iter().map(|p| p.1).sum::<F>() / n;
        let sxy: F = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: F = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }

    /// `E nu`.
    pub fn mean(&self) -> Result<F> {
        match &self.kind {
            Kind::Geometric { omega0, rho } => Ok((F::one() - *omega0) / *rho),
            Kind::Tabulated { weights, residual, tail, .. } => {
                let body: F = weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| F::from_usize_lossy(k) * w)
                    .sum();
                let tail_part = match tail {
                    Tail::Truncated => F::zero(),
                    Tail::Geometric { rho } => {
                        *residual * (F::from_usize_lossy(weights.len() - 1) + F::one() / *rho)
                    }
                };
                Ok(body + tail_part)
            }
        }
    }

    /// Draws `nu`.
    pub fn sample(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        match &self.kind {
            Kind::Geometric { omega0, rho } => {
                if u < omega0.as_f64() {
                    return 0;
                }
                let v: f64 = rng.random::<f64>();
                let g = ((1.0 - v).ln() / (-rho.as_f64()).ln_1p()).floor();
                1 + g.min(usize::MAX as f64 / 2.0) as usize
            }
            Kind::Tabulated { weights, residual, tail, .. } => {
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    acc += w.as_f64();
                    if u < acc {
                        return k;
                    }
                }
                match tail {
                    Tail::Geometric { rho } if *residual > F::zero() => {
                        let v: f64 = rng.random::<f64>();
                        let g = ((1.0 - v).ln() / (-rho.as_f64()).ln_1p()).floor();
                        weights.len() + g.min(usize::MAX as f64 / 2.0) as usize
                    }
                    _ => weights.iter().rposition(|w| *w > F::zero()).unwrap_or(0),
                }
            }
        }
    }
}
