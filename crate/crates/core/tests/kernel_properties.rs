use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use timecausal::kernels::{
    cumulants_logarithmic, cumulants_uniform, kernel_derivative_samples, limit_kernel_samples, CascadeKernel,
    StageCount,
};
use timecausal::recursive::sign_changes;
use timecausal::scales::{logarithmic_time_constants, uniform_time_constants, ScaleDistribution};

fn dist(tau: f64, c: Option<f64>, k: usize) -> ScaleDistribution {
    match c {
        None => uniform_time_constants(tau, k).unwrap(),
        Some(c) => logarithmic_time_constants(tau, c, k).unwrap(),
    }
}

fn horizon(d: &ScaleDistribution) -> f64 {
    d.mus.iter().sum::<f64>() + 12.0 * d.tau_max.sqrt() + 20.0 * d.mus.iter().cloned().fold(0.0, f64::max)
}

fn arb_c() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), (1.1f64..3.0).prop_map(Some), Just(Some(std::f64::consts::SQRT_2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_are_causal(tau in 0.1f64..50.0, c in arb_c(), k in 1usize..12, t in -100.0f64..-1e-9) {
        let d = dist(tau, c, k);
        let kernel = CascadeKernel::new(&d.mus).unwrap();
        prop_assert_eq!(kernel.value(t), 0.0);
        for n in 1..=2 {
            prop_assert_eq!(kernel.derivative(t, n), 0.0);
        }
    }

    #[test]
    fn mass_and_derivative_integrals(tau in 0.5f64..4.0, c in arb_c(), k in 4usize..10) {
        let d = dist(tau, c, k);
        // resolve the fastest stage as well as the overall width
        let fastest = d.mus.iter().cloned().fold(f64::INFINITY, f64::min);
        let dt = (tau.sqrt() / 256.0).min(fastest / 64.0);
        let integral = |n: usize| kernel_derivative_samples(&d, n, dt, horizon(&d)).unwrap().integral();
        prop_assert!((integral(0) - 1.0).abs() < 1e-6);
        for n in 1..=2 {
            prop_assert!(integral(n).abs() < 1e-6, "n={} integral {}", n, integral(n));
        }
    }

    #[test]
    fn sampled_moments_match_cumulants(tau in 0.5f64..4.0, c in 1.2f64..2.5, k in 2usize..=12, log in any::<bool>()) {
        let (d, report) = if log {
            (dist(tau, Some(c), k), cumulants_logarithmic(tau, c, StageCount::Finite(k)).unwrap())
        } else {
            (dist(tau, None, k), cumulants_uniform(tau, k).unwrap())
        };
        let h = kernel_derivative_samples(&d, 0, tau.sqrt() / 512.0, horizon(&d)).unwrap();
        let m = h.moments();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        prop_assert!(rel(m.mean, report.kappa[0]) < 1e-3);
        prop_assert!(rel(m.central[0], report.kappa[1]) < 1e-3);
        prop_assert!(rel(m.skewness(), report.gamma1) < 1e-3);
        prop_assert!(rel(m.kurtosis(), report.gamma2) < 1e-3);
    }
}

#[test]
fn limit_kernel_recurrence() {
    for (tau, c) in [(1.0, 2.0), (4.0, std::f64::consts::SQRT_2), (2.0, 1.681_792_830_507_429)] {
        let dt = f64::sqrt(tau) / 256.0;
        let span = 40.0 * f64::sqrt(tau);
        let coarse = limit_kernel_samples(tau, c, 1e-12, dt, span).unwrap();
        let fine = limit_kernel_samples(tau / (c * c), c, 1e-12, dt, span).unwrap();
        let mu = (c * c - 1.0).sqrt() / c * tau.sqrt();
        let exp: Vec<f64> = (0..coarse.len()).map(|i| (-(i as f64) * dt / mu).exp() / mu).collect();
        let mut l1 = 0.0;
        for i in 0..coarse.len() {
            // trapezoid rule over [0, t_i]
            let mut acc = 0.0;
            for (j, e) in exp.iter().enumerate().take(i + 1) {
                let w = if j == 0 || j == i { 0.5 } else { 1.0 };
                acc += w * e * fine.values[i - j];
            }
            l1 += (acc * dt - coarse.values[i]).abs() * dt;
        }
        assert!(l1 < 1e-4, "tau={tau} c={c}: L1 {l1}");
    }
}

#[test]
fn sampled_smoothing_does_not_add_sign_changes() {
    let mut rng = StdRng::seed_from_u64(7);
    let kernels: Vec<Vec<f64>> =
        [(1.0, None, 4), (1.0, Some(2.0), 7), (4.0, Some(std::f64::consts::SQRT_2), 5), (2.0, None, 2)]
            .iter()
            .map(|&(tau, c, k)| {
                let d = dist(tau, c, k);
                kernel_derivative_samples(&d, 0, 0.05, horizon(&d)).unwrap().values
            })
            .collect();
    for _ in 0..200 {
        let knots: Vec<f64> = (0..rng.random_range(3..12)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let per = 20;
        let mut signal = Vec::new();
        for w in knots.windows(2) {
            for i in 0..per {
                let f = i as f64 / per as f64;
                signal.push(w[0] * (1.0 - f) + w[1] * f);
            }
        }
        let before = sign_changes(&signal);
        for kernel in &kernels {
            let out: Vec<f64> = (0..signal.len() + kernel.len())
                .map(|i| {
                    let lo = i.saturating_sub(kernel.len() - 1);
                    (lo..=i.min(signal.len() - 1)).map(|j| signal[j] * kernel[i - j]).sum()
                })
                .collect();
            // ignore round-off in the far tail
            let floor = 1e-12 * out.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let significant: Vec<f64> = out.iter().map(|&v| if v.abs() < floor { 0.0 } else { v }).collect();
            assert!(sign_changes(&significant) <= before);
        }
    }
}

#[test]
fn limit_kernel_spectrum_is_the_stage_product() {
    use rustfft::num_complex::Complex64;
    use rustfft::FftPlanner;

    let n = 1 << 16;
    for (tau, c) in [(1.0, 2.0), (2.0, std::f64::consts::SQRT_2), (0.5, 3.0)] {
        let dt = f64::sqrt(tau) / 1024.0;
        let kernel = limit_kernel_samples(tau, c, 1e-14, dt, (n - 1) as f64 * dt).unwrap();
        let mut buf: Vec<Complex64> = kernel.values.iter().map(|&v| Complex64::new(v * dt, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);

        // infinite product over stage transfer functions 1 / (1 + i w mu_k)
        let spread = (c * c - 1.0).sqrt() * tau.sqrt();
        let mus: Vec<f64> = (1..).map(|k| c.powi(-k) * spread).take_while(|m| *m > 1e-18).collect();
        for (k, got) in buf.iter().enumerate().take(200) {
            let w = 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt);
            let expected = mus.iter().fold(Complex64::new(1.0, 0.0), |acc, m| acc / Complex64::new(1.0, w * m));
            assert!((got - expected).norm() < 1e-6, "tau={tau} c={c} k={k}: {got} vs {expected}");
        }
    }
}
