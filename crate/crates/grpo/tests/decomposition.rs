//! Monte Carlo estimates against exact moments, and the law of total
//! variance as a cross-check between two independent sampling passes.

use trajlab_grpo::closed_form::closed_form;
use trajlab_grpo::{
    simulate_variance, AdvantageMode, EstimatorConfig, HorizonScaling, NoiseKind, PolicyParams,
    RewardChannel, StateDistribution, WeightedState,
};

fn gaussian(base: Vec<f64>, sigma: f64) -> RewardChannel {
    RewardChannel {
        base,
        noise: NoiseKind::Gaussian { sigma },
        horizon: 1,
        scaling: HorizonScaling::Sqrt,
    }
}

fn cfg(mode: AdvantageMode, seed: u64) -> EstimatorConfig {
    EstimatorConfig {
        beta: 0.0,
        ref_logits: None,
        group_size: 4,
        advantage_mode: mode,
        samples_outer: 20_000,
        samples_inner: 100,
        seed,
        epsilon: 1e-8,
        bootstrap_resamples: 200,
    }
}

#[test]
fn affine_estimates_match_the_closed_form_single_state() {
    let policy = PolicyParams::new(vec![0.2, -0.3, 0.5, 0.0]).unwrap();
    let reference = PolicyParams::new(vec![0.0, 0.1, -0.2, 0.3]).unwrap();
    let channel = gaussian(vec![0.1, 0.4, 0.7, 1.0], 0.5);
    let states = StateDistribution::single(channel.clone());
    let mut config = cfg(AdvantageMode::FixedAffine { b: 0.5, c: 0.8 }, 42);
    config.beta = 0.2;
    config.ref_logits = Some(reference.clone());

    let exact = closed_form(&states, &policy, 0.2, Some(&reference), 0.5, 0.8).unwrap();
    let report = simulate_variance(&channel, &policy, &config, None).unwrap();
    let se = report.standard_errors;

    assert!(
        (report.sigma_tau - exact.sigma_tau).abs() <= 3.0 * se.sigma_tau,
        "sigma_tau {} vs exact {} (se {})",
        report.sigma_tau,
        exact.sigma_tau,
        se.sigma_tau
    );
    assert!(
        (report.sigma_a - exact.sigma_a).abs() <= 3.0 * se.sigma_a,
        "sigma_a {} vs exact {} (se {})",
        report.sigma_a,
        exact.sigma_a,
        se.sigma_a
    );
    assert_eq!(report.sigma_s, 0.0);
    assert!(
        (report.sigma_total - exact.sigma_total).abs() <= 3.0 * se.sigma_total,
        "sigma_total {} vs exact {} (se {})",
        report.sigma_total,
        exact.sigma_total,
        se.sigma_total
    );
    assert!(
        report.residual.abs() <= 3.0 * se.residual,
        "residual {} exceeds 3 se {}",
        report.residual,
        se.residual
    );
    assert!(
        (report.snr - exact.snr).abs() <= 3.0 * se.snr,
        "snr {} vs exact {} (se {})",
        report.snr,
        exact.snr,
        se.snr
    );
}

#[test]
fn affine_estimates_match_the_closed_form_two_states() {
    let policy = PolicyParams::uniform(3).unwrap();
    let states = StateDistribution {
        states: vec![
            WeightedState {
                probability: 0.3,
                channel: gaussian(vec![0.0, 0.5, 1.0], 0.2),
            },
            WeightedState {
                probability: 0.7,
                channel: gaussian(vec![1.0, 0.5, 0.0], 0.6),
            },
        ],
    };
    let config = cfg(AdvantageMode::FixedAffine { b: 0.5, c: 1.0 }, 7);
    let exact = closed_form(&states, &policy, 0.0, None, 0.5, 1.0).unwrap();
    assert!(exact.sigma_s > 1e-3, "setup should separate the states");

    // The channel argument is a placeholder here; states take precedence.
    let placeholder = gaussian(vec![0.0, 0.0, 0.0], 0.0);
    let report = simulate_variance(&placeholder, &policy, &config, Some(&states)).unwrap();
    let se = report.standard_errors;

    for (name, got, want, se) in [
        ("sigma_tau", report.sigma_tau, exact.sigma_tau, se.sigma_tau),
        ("sigma_a", report.sigma_a, exact.sigma_a, se.sigma_a),
        ("sigma_s", report.sigma_s, exact.sigma_s, se.sigma_s),
        (
            "sigma_total",
            report.sigma_total,
            exact.sigma_total,
            se.sigma_total,
        ),
        ("snr", report.snr, exact.snr, se.snr),
    ] {
        assert!(
            (got - want).abs() <= 3.0 * se,
            "{name}: {got} vs exact {want} (se {se})"
        );
    }
    assert!(report.residual.abs() <= 3.0 * se.residual);
}

#[test]
fn doubling_the_noise_scale_quadruples_sigma_tau() {
    // Same seed means the same underlying standard normal draws, so the
    // per-cell variances scale exactly and the ratio is 4 up to rounding.
    let policy = PolicyParams::uniform(4).unwrap();
    let base = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    let mut config = cfg(AdvantageMode::FixedAffine { b: 0.5, c: 1.0 }, 3);
    config.samples_outer = 400;
    config.bootstrap_resamples = 20;
    let narrow = simulate_variance(&gaussian(base.clone(), 0.4), &policy, &config, None).unwrap();
    let wide = simulate_variance(&gaussian(base, 0.8), &policy, &config, None).unwrap();
    let err = (wide.sigma_tau - 4.0 * narrow.sigma_tau).abs();
    assert!(
        err <= 1e-9 * wide.sigma_tau,
        "expected exact scaling, off by {err}"
    );
}

#[test]
fn group_normalized_sampling_still_obeys_total_variance() {
    let policy = PolicyParams::uniform(4).unwrap();
    let channel = gaussian(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], 0.3);
    let report =
        simulate_variance(&channel, &policy, &cfg(AdvantageMode::GroupNormalized, 13), None)
            .unwrap();
    assert!(report.sigma_tau > 0.0);
    assert!(report.sigma_a > 0.0);
    assert!(
        report.residual.abs() <= 3.0 * report.standard_errors.residual,
        "residual {} exceeds 3 se {}",
        report.residual,
        report.standard_errors.residual
    );
}
