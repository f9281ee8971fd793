use approx::assert_relative_eq;
use sidebandit::harness::verify::{
    verify_anytime_concentration, verify_fixed_schedule, verify_stopping_bound,
    weighted_mean_variance, SourceRule, StoppingRule, STOPPING_SOURCES,
};

#[test]
fn weighted_mean_variance_is_inverse_weighted_count() {
    let schedule = [1.0, 2.0, 0.5, 3.0, 1.0];
    let (var, predicted) = weighted_mean_variance(&schedule, 100_000, 17);
    assert_relative_eq!(
        predicted,
        1.0 / (1.0 + 0.25 + 4.0 + 1.0 / 9.0 + 1.0),
        epsilon = 1e-15
    );
    assert!(
        (var / predicted - 1.0).abs() < 0.05,
        "variance {var}, predicted {predicted}"
    );
}

#[test]
fn fixed_schedule_deviation_within_band() {
    for (schedule, eps) in [
        (vec![1.0; 8], 0.5),
        (vec![1.0, 2.0, 2.0, 0.7], 1.0),
        (vec![3.0; 20], 0.4),
    ] {
        let out = verify_fixed_schedule(&schedule, eps, 100_000, 2).unwrap();
        assert_eq!(out.passed(), Some(true), "{schedule:?} eps={eps}: {out:?}");
    }
}

#[test]
fn fixed_schedule_rate_close_to_gaussian_tail() {
    // Eight unit-noise samples: the mean has σ = 1/√8, so P(|·| > 0.5) = P(|Z| > √2).
    let out = verify_fixed_schedule(&[1.0; 8], 0.5, 100_000, 4).unwrap();
    let exact = 0.157_299_207_050_285_1;
    assert!((out.empirical_rate().unwrap() - exact).abs() < 0.005);
}

#[test]
fn equal_interval_ends_limit() {
    // As H → L the interval bound tends to 2 t^{−α}.
    let near = StoppingRule::Interval {
        lower: 1.0,
        upper: 1.0 + 1e-12,
        alpha: 2.0,
    };
    assert_relative_eq!(
        near.bound(100),
        2.0 * 100f64.powf(-2.0),
        max_relative = 1e-9
    );
}

#[test]
fn threshold_rate_stays_below_bound_for_every_rule() {
    for rule in [
        SourceRule::Fixed(0),
        SourceRule::Fixed(1),
        SourceRule::Alternating,
        SourceRule::ChaseDeviation,
        SourceRule::AvoidDeviation,
    ] {
        let out = verify_stopping_bound(
            StoppingRule::Threshold { r: 4.0, eps: 1.0 },
            &STOPPING_SOURCES,
            rule,
            200,
            20_000,
            8,
        )
        .unwrap();
        assert_eq!(out.passed(), Some(true), "{rule:?}: {out:?}");
    }
}

#[test]
fn anytime_verifier_detects_deviations_with_small_alpha() {
    // Fixed unit noise: the event is |Z| > sqrt(2α ln t) with Z standard normal.
    // α = 0.2, t = 100 gives a threshold of 1.3572, two-sided tail 0.17468.
    let out =
        verify_anytime_concentration(&[1.0], SourceRule::Fixed(0), 100, 0.2, 100_000, 6).unwrap();
    assert!(
        (out.empirical_rate().unwrap() - 0.1747).abs() < 0.005,
        "{out:?}"
    );
}
