//! Galilean warping so that a pattern translating with a known image velocity
//! becomes stationary, letting plain temporal derivatives act as
//! velocity-adapted ones.

use crate::image::Image;
use crate::spatial::mirror;

/// Cubic convolution weight with `a = -0.5`.
fn keys(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic interpolation at a real position, with mirrored borders.
pub fn cubic_sample(img: &Image, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    if fx == 0.0 && fy == 0.0 {
        return img.get(mirror(x0, w), mirror(y0, h));
    }
    let mut acc = 0.0;
    for j in -1..=2isize {
        let wy = keys(j as f64 - fy);
        if wy == 0.0 {
            continue;
        }
        let yy = mirror(y0 + j, h);
        let mut row = 0.0;
        for i in -1..=2isize {
            let wx = keys(i as f64 - fx);
            if wx != 0.0 {
                row += wx * img.get(mirror(x0 + i, w), yy);
            }
        }
        acc += wy * row;
    }
    acc
}

fn shifted(img: &Image, dx: f64, dy: f64) -> Image {
    let (w, h) = img.dims();
    Image::from_fn(w, h, |x, y| cubic_sample(img, x as f64 + dx, y as f64 + dy))
}

/// Frame at time `t` resampled at `(x + v_x t, y + v_y t)`.
///
/// A pattern moving with velocity `v` is stationary in the warped frames.
pub fn warp_frame(img: &Image, velocity: (f64, f64), t: f64) -> Image {
    if velocity == (0.0, 0.0) {
        return img.clone();
    }
    shifted(img, velocity.0 * t, velocity.1 * t)
}

/// Maps a result computed in warped coordinates back to image coordinates.
pub fn unwarp_frame(img: &Image, velocity: (f64, f64), t: f64) -> Image {
    if velocity == (0.0, 0.0) {
        return img.clone();
    }
    shifted(img, -velocity.0 * t, -velocity.1 * t)
}

/// Warps a sequence whose first frame is at time 0.
pub fn velocity_warp(frames: &[Image], velocity: (f64, f64)) -> Vec<Image> {
    frames.iter().enumerate().map(|(t, f)| warp_frame(f, velocity, t as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_partition_unity() {
        for i in 0..10 {
            let f = i as f64 / 10.0;
            let s: f64 = (-1..=2).map(|j| keys(j as f64 - f)).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(keys(0.0), 1.0);
        assert_eq!(keys(1.0), 0.0);
        assert_eq!(keys(2.0), 0.0);
    }

    #[test]
    fn zero_velocity_and_integer_shift() {
        let img = Image::from_fn(9, 8, |x, y| (x * x + 3 * y) as f64 * 0.37);
        assert_eq!(warp_frame(&img, (0.0, 0.0), 5.0), img);
        let moved = warp_frame(&img, (1.0, -1.0), 2.0);
        for y in 2..8 {
            for x in 0..7 {
                assert_eq!(moved.get(x, y), img.get(x + 2, y - 2));
            }
        }
    }

    #[test]
    fn reproduces_cubic_polynomials_inside() {
        let img = Image::from_fn(12, 12, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.01 * x * x * x - 0.2 * x * y + y * y
        });
        let v = cubic_sample(&img, 5.3, 6.7);
        let expect = 0.01 * 5.3f64.powi(3) - 0.2 * 5.3 * 6.7 + 6.7 * 6.7;
        // cubic convolution is exact up to quadratics; the cubic term leaves a small error
        assert!((v - expect).abs() < 1e-2);
        let q = Image::from_fn(12, 12, |x, y| (x * x) as f64 + 2.0 * y as f64);
        assert!((cubic_sample(&q, 4.25, 3.5) - (4.25f64 * 4.25 + 7.0)).abs() < 1e-12);
    }
}
