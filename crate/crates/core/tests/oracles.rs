use proptest::prelude::*;
use shiryaev_hmm::detectors::{Detector, DetectorKind, GsrDetector, ShiryaevDetector};
use shiryaev_hmm::experiments::examples::example_config;
use shiryaev_hmm::experiments::{estimate_pfa, exact_oracle, ExperimentConfig, RunSettings, ThresholdSpec};
use shiryaev_hmm::hmm::sample_path;
use shiryaev_hmm::likelihood::{brute_force_change_likelihood, brute_force_likelihood, filter_init, llr_segment, llr_stream, LlrMode};
use shiryaev_hmm::{ChangePointPrior, EmissionFamily, HmmSpec, Regime, RegimePair};

fn stochastic(raw: &[f64], d: usize) -> Vec<Vec<f64>> {
    raw.chunks(d)
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_matches_brute_force(
        d in 1usize..=3,
        raw in prop::collection::vec(0.05f64..1.0, 9),
        means in prop::collection::vec(-2.0f64..2.0, 3),
        ys in prop::collection::vec(-3.0f64..3.0, 1..=6),
    ) {
        let spec = HmmSpec::new(
            stochastic(&raw[..d * d], d),
            EmissionFamily::Gaussian { means: means[..d].to_vec(), std_devs: vec![1.0; d] },
        ).unwrap();
        let mut f = filter_init(&spec, Regime::Pre, ys[0]).unwrap();
        for &y in &ys[1..] {
            f.advance(&spec, Regime::Pre, y).unwrap();
        }
        let exact = brute_force_likelihood(&spec, &ys).unwrap();
        let exact = exact.ln();
        prop_assert!((f.log_norm - exact).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn stationary_law_is_invariant(d in 1usize..=4, raw in prop::collection::vec(0.05f64..1.0, 16)) {
        let p = stochastic(&raw[..d * d], d);
        let spec = HmmSpec::new(p.clone(), EmissionFamily::Bernoulli { success: vec![0.5; d] }).unwrap();
        let pi = spec.stationary();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for xn in 0..d {
            let v: f64 = (0..d).map(|x| pi[x] * p[x][xn]).sum();
            prop_assert!((v - pi[xn]).abs() < 1e-12);
        }
    }

    #[test]
    fn shiryaev_statistic_is_monotone_in_every_increment(
        gs in prop::collection::vec(-3.0f64..3.0, 1..40),
        bump in 0.0f64..2.0,
        at in 0usize..40,
    ) {
        let prior = ChangePointPrior::geometric(0.0, 0.05).unwrap();
        let mut a = ShiryaevDetector::new(prior.clone(), f64::MAX).unwrap();
        let mut b = ShiryaevDetector::new(prior, f64::MAX).unwrap();
        for (i, &g) in gs.iter().enumerate() {
            a.step(g).unwrap();
            b.step(if i == at % gs.len() { g + bump } else { g }).unwrap();
            prop_assert!(b.log_statistic() >= a.log_statistic() - 1e-12);
        }
    }

    #[test]
    fn gsr_exceeds_shiryaev_over_rho(gs in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let rho = 0.01;
        let mut s = ShiryaevDetector::new(ChangePointPrior::geometric(0.0, rho).unwrap(), f64::MAX).unwrap();
        let mut r = GsrDetector::new(0.0, f64::MAX).unwrap();
        for &g in &gs {
            s.step(g).unwrap();
            r.step(g).unwrap();
            prop_assert!(s.log_statistic() - rho.ln() >= r.log_statistic() - 1e-12);
        }
    }
}

#[test]
fn monte_carlo_pfa_matches_exact_enumeration() {
    let base = example_config(1).unwrap().build::<f64>().unwrap();
    let horizon = 8;
    for threshold in [2.0, 5.0] {
        let cfg = ExperimentConfig::new(
            base.pair.clone(),
            ChangePointPrior::geometric(0.0, 0.3).unwrap(),
            DetectorKind::Shiryaev,
            ThresholdSpec::List(vec![threshold]),
            RunSettings { reps: 40_000, horizon, pfa_tail_tol: 0.0, ..RunSettings::default() },
        )
        .unwrap();
        let exact = exact_oracle(&cfg, threshold, horizon).unwrap();
        let mc = estimate_pfa(&cfg, threshold).unwrap();
        assert!(mc.within_sigmas(exact.pfa, 4.0), "A={threshold}: mc {mc:?} exact {}", exact.pfa);
        let total: f64 = exact.stop_probabilities.iter().sum::<f64>() + exact.p_censored;
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn exact_segments_match_enumerated_change_likelihoods() {
    let cfg = example_config(2).unwrap().build::<f64>().unwrap();
    let n = 10;
    let path = sample_path(&cfg.pair, Some(4), n, 4).unwrap();
    let obs = &path.observations[..=n];
    let base = brute_force_likelihood(&cfg.pair.pre, obs).unwrap().ln();
    for k in 1..=n {
        let s: f64 = llr_segment(&cfg.pair, obs, k, n, LlrMode::Exact).unwrap();
        let exact = brute_force_change_likelihood(&cfg.pair, obs, k).unwrap().ln() - base;
        assert!((s - exact).abs() < 1e-9 * exact.abs().max(1.0), "k={k}: {s} vs {exact}");
    }
    let stream = llr_stream(&cfg.pair, obs).unwrap();
    assert_eq!(stream.increments.len(), n);
}

#[test]
fn restart_and_exact_segments_agree_for_iid_models() {
    let pre = HmmSpec::iid(EmissionFamily::Gaussian { means: vec![0.0], std_devs: vec![1.0] }).unwrap();
    let post = HmmSpec::iid(EmissionFamily::Gaussian { means: vec![0.7], std_devs: vec![1.0] }).unwrap();
    let pair = RegimePair::new(pre, post).unwrap();
    let path = sample_path(&pair, Some(10), 60, 9).unwrap();
    for k in [1, 5, 20] {
        let a: f64 = llr_segment(&pair, &path.observations, k, 60, LlrMode::Exact).unwrap();
        let b = llr_segment(&pair, &path.observations, k, 60, LlrMode::Restart).unwrap();
        assert!((a - b).abs() < 1e-10, "k={k}: {a} vs {b}");
    }
}
