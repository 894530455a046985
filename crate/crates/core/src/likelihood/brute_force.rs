use crate::error::{Error, Result};
use crate::hmm::{HmmSpec, RegimePair};
use crate::scalar::Scalar;

const MAX_TERMS: usize = 100_000;

fn check_size(d: usize, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Argument("empty observation sequence".into()));
    }
    let mut terms: usize = 1;
    for _ in 0..len {
        terms = terms.saturating_mul(d);
    }
    if terms > MAX_TERMS {
        return Err(Error::Argument(format!(
            "{d}^{len} hidden sequences exceed the enumeration cap of {MAX_TERMS}"
        )));
    }
    Ok(())
}

/// Sums the joint density over every hidden sequence. `regime_at(t)` selects
/// the spec governing step `t`.
fn path_sum<'s, F: Scalar>(
    specs: impl Fn(usize) -> &'s HmmSpec<F>,
    d: usize,
    obs: &[F],
) -> F {
    let len = obs.len();
    let mut xs = vec![0usize; len];
    let mut total = F::zero();
    loop {
        let s0 = specs(0);
        let mut p = s0.stationary()[xs[0]] * s0.emission().log_density(xs[0], obs[0], None).exp();
        for t in 1..len {
            let s = specs(t);
            p = p
                * s.transition(xs[t - 1], xs[t])
                * s.emission().log_density(xs[t], obs[t], Some(obs[t - 1])).exp();
        }
        total += p;
        let mut i = 0;
        loop {
            if i == len {
                return total;
            }
            xs[i] += 1;
            if xs[i] < d {
                break;
            }
            xs[i] = 0;
            i += 1;
        }
    }
}

/// Joint density `p(y_0 .. y_n)` by explicit summation over hidden paths.
/// Intended as a test oracle; requires `d^(n+1) <= 1e5`.
pub fn brute_force_likelihood<F: Scalar>(spec: &HmmSpec<F>, observations: &[F]) -> Result<F> {
    check_size(spec.num_states(), observations.len())?;
    Ok(path_sum(|_| spec, spec.num_states(), observations))
}

/// Joint density under a change at `k` (`k = 0` means post from the start).
pub fn brute_force_change_likelihood<F: Scalar>(
    pair: &RegimePair<F>,
    observations: &[F],
    k: usize,
) -> Result<F> {
    check_size(pair.num_states(), observations.len())?;
    Ok(path_sum(
        |t| if t >= k { &pair.post } else { &pair.pre },
        pair.num_states(),
        observations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::EmissionFamily;

    #[test]
    fn single_state_is_product() {
        let spec = HmmSpec::iid(EmissionFamily::Bernoulli { success: vec![0.3] }).unwrap();
        let v = brute_force_likelihood(&spec, &[1.0, 0.0, 1.0]).unwrap();
        assert!((v - 0.3_f64 * 0.7 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn two_state_agrees_with_forward_recursion() {
        let t = [[0.8, 0.2], [0.4, 0.6]];
        let p = [0.25, 0.75];
        let spec = HmmSpec::new(
            vec![t[0].to_vec(), t[1].to_vec()],
            EmissionFamily::Bernoulli { success: p.to_vec() },
        )
        .unwrap();
        let y = [1.0, 1.0, 0.0, 1.0];
        let f = |x: usize, y: f64| if y == 1.0 { p[x] } else { 1.0 - p[x] };
        let pi = [2.0 / 3.0, 1.0 / 3.0];
        let mut a = [pi[0] * f(0, y[0]), pi[1] * f(1, y[0])];
        for &yt in &y[1..] {
            a = [
                (a[0] * t[0][0] + a[1] * t[1][0]) * f(0, yt),
                (a[0] * t[0][1] + a[1] * t[1][1]) * f(1, yt),
            ];
        }
        let v = brute_force_likelihood(&spec, &y).unwrap();
        assert!(((a[0] + a[1]) - v).abs() < 1e-15);
    }

    #[test]
    fn size_cap() {
        let spec = HmmSpec::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            EmissionFamily::Bernoulli { success: vec![0.2, 0.4] },
        )
        .unwrap();
        assert!(brute_force_likelihood(&spec, &[0.0; 17]).is_err());
        assert!(brute_force_likelihood(&spec, &[0.0; 16]).is_ok());
    }
}
