use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use timecausal::recursive::{impulse_response, sign_changes, CascadeState, InitMode, RecursiveCascade};
use timecausal::scales::{logarithmic_time_constants, uniform_time_constants};

fn cascade(tau: f64, c: Option<f64>, k: usize) -> RecursiveCascade {
    let dist = match c {
        None => uniform_time_constants(tau, k).unwrap(),
        Some(c) => logarithmic_time_constants(tau, c, k).unwrap(),
    };
    RecursiveCascade::from_distribution(&dist).unwrap()
}

fn run(cascade: &RecursiveCascade, signal: &[f64]) -> Vec<Vec<f64>> {
    let mut state = CascadeState::new(cascade, 1, InitMode::Zero);
    signal.iter().map(|&x| state.step(cascade, x).unwrap()).collect()
}

#[test]
fn every_stage_is_variation_diminishing_on_integer_signals() {
    let mut rng = StdRng::seed_from_u64(42);
    let cascades =
        [cascade(4.0, None, 3), cascade(16.0, Some(std::f64::consts::SQRT_2), 7), cascade(100.0, Some(2.0), 5)];
    for _ in 0..1000 {
        let signal: Vec<f64> = (0..256).map(|_| rng.random_range(-4i32..=4) as f64).collect();
        let before = sign_changes(&signal);
        for c in &cascades {
            let outputs = run(c, &signal);
            let mut previous = before;
            for k in 0..c.stages() {
                let stage: Vec<f64> = outputs.iter().map(|o| o[k]).collect();
                let now = sign_changes(&stage);
                assert!(now <= previous, "stage {k}: {now} > {previous}");
                previous = now;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chunked_processing_is_bit_exact(
        tau in 0.5f64..200.0,
        k in 1usize..9,
        split in 1usize..63,
        seed in any::<u64>(),
    ) {
        let c = cascade(tau, Some(std::f64::consts::SQRT_2), k);
        let mut rng = StdRng::seed_from_u64(seed);
        let frames: Vec<Vec<f64>> = (0..64).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();

        let mut whole = CascadeState::new(&c, 5, InitMode::PrimeWithFirst);
        let expected: Vec<Vec<f64>> = frames.iter().map(|f| whole.step_slice(&c, f).unwrap().to_vec()).collect();

        let mut first = CascadeState::new(&c, 5, InitMode::PrimeWithFirst);
        let mut got: Vec<Vec<f64>> = frames[..split].iter().map(|f| first.step_slice(&c, f).unwrap().to_vec()).collect();
        let mut resumed = CascadeState::from_parts(first.values().to_vec(), 5, c.stages(), InitMode::PrimeWithFirst, first.frame_index).unwrap();
        got.extend(frames[split..].iter().map(|f| resumed.step_slice(&c, f).unwrap().to_vec()));
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn later_stages_act_on_earlier_outputs(tau in 1.0f64..100.0, k in 2usize..8, split in 1usize..7, seed in any::<u64>()) {
        let split = split.min(k - 1);
        let c = cascade(tau, None, k);
        let tail = c.suffix(split).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let signal: Vec<f64> = (0..80).map(|_| rng.random_range(-1.0..1.0)).collect();
        let full = run(&c, &signal);
        let intermediate: Vec<f64> = full.iter().map(|o| o[split - 1]).collect();
        let resumed = run(&tail, &intermediate);
        for (a, b) in full.iter().zip(&resumed) {
            prop_assert!((a[k - 1] - b[tail.stages() - 1]).abs() <= 1e-14);
        }
    }

    #[test]
    fn impulse_response_has_cascade_moments(tau in 0.5f64..64.0, k in 1usize..8) {
        let c = cascade(tau, Some(2.0), k);
        prop_assert!((c.variance() - tau).abs() <= 1e-12 * tau);
        let h = impulse_response(&c, 1e-13).unwrap();
        let mass: f64 = h.values.iter().sum();
        let mean: f64 = h.values.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>();
        let var: f64 = h.values.iter().enumerate().map(|(i, v)| (i as f64 - mean).powi(2) * v).sum::<f64>();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!((mean - c.mean()).abs() < 1e-8 * (1.0 + c.mean()));
        prop_assert!((var - tau).abs() < 1e-7 * (1.0 + tau));
    }

    #[test]
    fn constant_input_is_a_fixed_point(tau in 0.1f64..500.0, k in 1usize..10, level in -100.0f64..100.0) {
        let c = cascade(tau, None, k);
        let mut state = CascadeState::new(&c, 3, InitMode::PrimeWithFirst);
        for _ in 0..10 {
            let out = state.step_slice(&c, &[level; 3]).unwrap();
            for v in out {
                prop_assert!((v - level).abs() <= 1e-12 * (1.0 + level.abs()));
            }
        }
    }
}
