use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use timecausal::features::{evaluate, required_partials, FeatureKind, FeatureParams, JetNormalization, JetSlice};
use timecausal::spatial::smooth_separable;
use timecausal::Image;

const N: usize = 32;

fn random_image(rng: &mut StdRng) -> Image {
    let raw = Image::new(N, N, (0..N * N).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    // smooth a little so that derivatives stay of unit order
    let img = smooth_separable(&raw, 1.5, 1e-12).unwrap();
    let peak = img.max_abs();
    img.map(|v| v / peak)
}

fn jet(frames: &[Image; 3], features: &[FeatureKind], normalization: JetNormalization) -> JetSlice {
    let required = required_partials(features);
    JetSlice::from_temporal([Some(&frames[0]), Some(&frames[1]), Some(&frames[2])], &required, normalization).unwrap()
}

fn interior_max_diff(a: &Image, b: &Image, margin: usize) -> f64 {
    let mut worst = 0.0f64;
    for y in margin..a.height() - margin {
        for x in margin..a.width() - margin {
            worst = worst.max((a.get(x, y) - b.get(x, y)).abs());
        }
    }
    worst
}

#[test]
fn constant_volume_gives_zero_everywhere() {
    let frames = [Image::filled(N, N, 3.5), Image::zeros(N, N), Image::zeros(N, N)];
    let j = jet(&frames, &FeatureKind::ALL, JetNormalization::identity());
    for kind in FeatureKind::ALL {
        let out = evaluate(kind, &j, &FeatureParams::default()).unwrap();
        assert_eq!(out.max_abs(), 0.0, "{}", kind.name());
    }
}

#[test]
fn additive_ramp_invariance_both_ways() {
    let mut rng = StdRng::seed_from_u64(11);
    let invariant = [
        FeatureKind::DetHessian3,
        FeatureKind::StLaplacian,
        FeatureKind::Q3,
        FeatureKind::QtLaplacian,
        FeatureKind::QtDetHessian,
    ];
    let sensitive = [FeatureKind::Q1, FeatureKind::Q2, FeatureKind::GaussCurvature];
    let params = FeatureParams::default();
    for _ in 0..5 {
        let frames = [random_image(&mut rng), random_image(&mut rng), random_image(&mut rng)];
        let (a, b, c, t0) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.1..0.5), 2.0);
        let ramped = [
            Image::from_fn(N, N, |x, y| frames[0].get(x, y) + a * x as f64 + b * y as f64 + c * t0),
            frames[1].map(|v| v + c),
            frames[2].clone(),
        ];
        let all: Vec<FeatureKind> = invariant.iter().chain(&sensitive).copied().collect();
        let before = jet(&frames, &all, JetNormalization::identity());
        let after = jet(&ramped, &all, JetNormalization::identity());
        for kind in invariant {
            let d = interior_max_diff(
                &evaluate(kind, &before, &params).unwrap(),
                &evaluate(kind, &after, &params).unwrap(),
                3,
            );
            assert!(d <= 1e-9, "{} changed by {d}", kind.name());
        }
        for kind in sensitive {
            let d = interior_max_diff(
                &evaluate(kind, &before, &params).unwrap(),
                &evaluate(kind, &after, &params).unwrap(),
                3,
            );
            assert!(d > 1e-4, "{} unexpectedly unchanged ({d})", kind.name());
        }
    }
}

#[test]
fn quarter_turns_commute_with_every_feature() {
    let mut rng = StdRng::seed_from_u64(5);
    let frames = [random_image(&mut rng), random_image(&mut rng), random_image(&mut rng)];
    let params = FeatureParams::default();
    let mut rotated = frames.clone();
    for turn in 1..=3 {
        rotated = rotated.map(|f| f.rotate90());
        let j = jet(&frames, &FeatureKind::ALL, JetNormalization::identity());
        let jr = jet(&rotated, &FeatureKind::ALL, JetNormalization::identity());
        for kind in FeatureKind::ALL {
            let mut expected = evaluate(kind, &j, &params).unwrap();
            for _ in 0..turn {
                expected = expected.rotate90();
            }
            let got = evaluate(kind, &jr, &params).unwrap();
            let scale = expected.max_abs().max(1e-300);
            let d = interior_max_diff(&expected, &got, 0);
            assert!(d <= 1e-13 * scale, "{} after {turn} turns: {d}", kind.name());
        }
    }
}

#[test]
fn normalized_det_hessian_is_scale_homogeneous() {
    // a blob of width w at scale s against a blob of width 2w on a doubled grid at scale 4s
    let response = |size: usize, blob_var: f64, s: f64| {
        let centre = (size as f64 - 1.0) / 2.0;
        let img = Image::from_fn(size, size, |x, y| {
            let r2 = (x as f64 - centre).powi(2) + (y as f64 - centre).powi(2);
            (-r2 / (2.0 * blob_var)).exp()
        });
        let smoothed = smooth_separable(&img, s, 1e-12).unwrap();
        let zero = Image::zeros(size, size);
        let norm = JetNormalization { s, tau: 1.0, gamma_s: 1.0, temporal: [1.0; 3] };
        let j = jet(&[smoothed, zero.clone(), zero], &[FeatureKind::DetHessian], norm);
        evaluate(FeatureKind::DetHessian, &j, &FeatureParams::default()).unwrap().max_abs()
    };
    for (blob_var, s) in [(8.0, 8.0), (12.0, 6.0), (9.0, 16.0)] {
        let small = response(41, blob_var, s);
        let large = response(81, 4.0 * blob_var, 4.0 * s);
        let rel = (large - small).abs() / small;
        assert!(rel < 0.02, "blob variance {blob_var} s {s}: {small} vs {large}");
    }
}
