use crate::scalar::Scalar;

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<F = f64> {
    pub mean: F,
    pub std_error: F,
    /// Number of samples entering the mean.
    pub count: usize,
    /// Replications excluded (or conservatively scored) because they hit the horizon.
    pub censored_count: usize,
}

impl<F: Scalar> McEstimate<F> {
    pub fn from_samples(samples: &[F]) -> Self {
        let mut acc = Accumulator::default();
        for &x in samples {
            acc.push(x);
        }
        acc.finish()
    }

    /// Upper one-sided confidence bound `mean + z * se`.
    pub fn upper(&self, z: F) -> F {
        self.mean + z * self.std_error
    }

    pub fn lower(&self, z: F) -> F {
        self.mean - z * self.std_error
    }

    /// True when `value` lies within `k` standard errors of the mean.
    pub fn within_sigmas(&self, value: F, k: F) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }

    pub fn with_censored(mut self, censored: usize) -> Self {
        self.censored_count = censored;
        self
    }
}

/// Welford running mean/variance. Merging is done by pushing in a fixed order,
/// which keeps results bit-identical regardless of how samples were produced.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator<F = f64> {
    n: usize,
    mean: F,
    m2: F,
}

impl<F: Scalar> Default for Accumulator<F> {
    fn default() -> Self {
        Self {
            n: 0,
            mean: F::zero(),
            m2: F::zero(),
        }
    }
}

impl<F: Scalar> Accumulator<F> {
    pub fn push(&mut self, x: F) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / F::from_usize_lossy(self.n);
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    pub fn variance(&self) -> F {
        if self.n < 2 {
            F::zero()
        } else {
            (self.m2 / F::from_usize_lossy(self.n - 1)).max(F::zero())
        }
    }

    pub fn finish(&self) -> McEstimate<F> {
        let se = if self.n == 0 {
            F::zero()
        } else {
            (self.variance() / F::from_usize_lossy(self.n)).sqrt()
        };
        McEstimate {
            mean: if self.n == 0 { F::nan() } else { self.mean },
            std_error: se,
            count: self.n,
            censored_count: 0,
        }
    }
}

/// Batch-means estimate for a correlated sequence (e.g. increments along one
/// ergodic path). Uses `batches` contiguous blocks.
pub fn batch_means<F: Scalar>(values: &[F], batches: usize) -> McEstimate<F> {
    let batches = batches.max(2).min(values.len().max(2));
    let len = values.len() / batches;
    if len == 0 {
        return McEstimate::from_samples(values);
    }
    let mut overall = F::zero();
    for &v in values {
        overall += v;
    }
    let mean = overall / F::from_usize_lossy(values.len());
    let mut acc = Accumulator::default();
    for b in 0..batches {
        let chunk = &values[b * len..(b + 1) * len];
        let s: F = chunk.iter().copied().sum();
        acc.push(s / F::from_usize_lossy(len));
    }
    let se = (acc.variance() / F::from_usize_lossy(batches)).sqrt();
    McEstimate {
        mean,
        std_error: se,
        count: values.len(),
        censored_count: 0,
    }
}
