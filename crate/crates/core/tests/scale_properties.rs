use proptest::prelude::*;

use timecausal::scales::{
    composed_mean_variance, delay_limit_logarithmic, logarithmic_from_min_scale, logarithmic_time_constants,
    mean_logarithmic, mean_uniform, tmax_uniform, truncated_limit_time_constants, uniform_time_constants,
};

const TABLE_C: [f64; 3] = [std::f64::consts::SQRT_2, 1.681_792_830_507_429, 2.0];

fn variance_additive(mus: &[f64], tau: f64) -> bool {
    let sum: f64 = mus.iter().map(|m| m * m).sum();
    (sum - tau).abs() <= 1e-12 * tau
}

proptest! {
    #[test]
    fn variances_add_up(tau in 1e-3f64..1e4, c in 1.01f64..4.0, k in 1usize..40) {
        prop_assert!(variance_additive(&uniform_time_constants(tau, k).unwrap().mus, tau));
        prop_assert!(variance_additive(&logarithmic_time_constants(tau, c, k).unwrap().mus, tau));
        if k >= 2 {
            let d = logarithmic_from_min_scale(tau / c.powi(4), tau, k).unwrap();
            prop_assert!(variance_additive(&d.mus, tau));
        }
        let limit = truncated_limit_time_constants(tau, c, 1e-8).unwrap();
        prop_assert!(variance_additive(&limit.mus, limit.tau_max));
        prop_assert!(limit.tau_max <= tau && limit.tau_max >= tau * (1.0 - 1e-8));
    }

    #[test]
    fn delays_grow_with_stage_count(tau in 1e-2f64..1e3, c in 1.05f64..4.0, k in 1usize..30) {
        prop_assert!(mean_uniform(tau, k + 1) > mean_uniform(tau, k));
        let (a, b) = (mean_logarithmic(tau, c, k).unwrap(), mean_logarithmic(tau, c, k + 1).unwrap());
        prop_assert!(b >= a - 1e-12 * a);
        prop_assert!(b <= delay_limit_logarithmic(tau, c).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn maximum_precedes_mean(tau in 1e-2f64..1e3, k in 2usize..40) {
        let (mean, _) = composed_mean_variance(&uniform_time_constants(tau, k).unwrap());
        prop_assert!(tmax_uniform(tau, k) < mean);
    }
}

#[test]
fn logarithmic_delays_are_shorter() {
    for c in TABLE_C {
        for k in 2..=12 {
            let (log, uni) = (mean_logarithmic(1.0, c, k).unwrap(), mean_uniform(1.0, k));
            if k == 2 && c == std::f64::consts::SQRT_2 {
                // both distributions put the first level at tau / 2
                assert!((log - uni).abs() < 1e-15);
            } else {
                assert!(log < uni, "c={c} K={k}");
            }
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(logarithmic_time_constants(1.0, 1.0, 4).is_err());
    assert!(logarithmic_time_constants(1.0, 0.5, 4).is_err());
    assert!(uniform_time_constants(-1.0, 4).is_err());
    assert!(uniform_time_constants(1.0, 0).is_err());
    assert!(logarithmic_from_min_scale(2.0, 1.0, 4).is_err());
    assert!(truncated_limit_time_constants(1.0, 2.0, 0.0).is_err());
}
