//! Discrete spatial scale-space: the discrete analogue of the Gaussian kernel,
//! separable and rotationally improved smoothing, and central differences.
//!
//! All boundaries are handled by mirroring about the edge sample, so the sample
//! beyond index 0 is index 1 and the edge itself is not repeated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

/// One half `T(0..=N; s)` of the symmetric discrete Gaussian kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGaussian {
    pub s: f64,
    /// `values[n] = T(n; s)` for `n = 0..=half_width`.
    pub values: Vec<f64>,
    pub tail_eps: f64,
}

/// `e^{-s} I_n(s)` for `n = 0..=n_max`, normalized so the two-sided sum is 1.
fn scaled_bessel_sequence(s: f64, n_max: usize) -> Vec<f64> {
    if s == 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    if s < 0.5 {
        return series_bessel_sequence(s, n_max);
    }
    // Miller's downward recurrence I_{n-1} = I_{n+1} + (2n/s) I_n from far above n_max.
    let start = n_max.max((25.0 * s.sqrt()) as usize + s as usize / 4) + 40;
    let mut b = vec![0.0; start + 2];
    b[start] = 1e-280;
    for n in (1..=start).rev() {
        b[n - 1] = b[n + 1] + (2.0 * n as f64 / s) * b[n];
        if b[n - 1] > 1e250 {
            for v in b[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let total = b[0] + 2.0 * b[1..].iter().sum::<f64>();
    b.truncate(n_max + 1);
    b.resize(n_max + 1, 0.0);
    b.iter().map(|v| v / total).collect()
}

/// Power series for small `s`.
fn series_bessel_sequence(s: f64, n_max: usize) -> Vec<f64> {
    let half = s / 2.0;
    let scale = (-s).exp();
    (0..=n_max)
        .map(|n| {
            // leading term (s/2)^n / n!
            let mut term = (1..=n).fold(1.0, |acc, i| acc * half / i as f64);
            let mut sum = term;
            for k in 1..60 {
                term *= half * half / (k as f64 * (n + k) as f64);
                sum += term;
                if term < 1e-18 * sum {
                    break;
                }
            }
            scale * sum
        })
        .collect()
}

impl DiscreteGaussian {
    /// Kernel truncated at the smallest half-width keeping mass above `1 - eps`.
    pub fn new(s: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::param(format!("spatial variance must be non-negative, got {s}")));
        }
        if s == 0.0 {
            return Ok(DiscreteGaussian { s, values: vec![1.0], tail_eps: eps });
        }
        let mut n_max = (10.0 * s.sqrt()) as usize + 16;
        loop {
            let all = scaled_bessel_sequence(s, n_max);
            let mut mass = all[0];
            for (n, v) in all.iter().enumerate().skip(1) {
                if mass > 1.0 - eps {
                    return Ok(DiscreteGaussian { s, values: all[..n].to_vec(), tail_eps: eps });
                }
                mass += 2.0 * v;
            }
            if mass > 1.0 - eps {
                return Ok(DiscreteGaussian { s, values: all, tail_eps: eps });
            }
            n_max *= 2;
        }
    }

    pub fn half_width(&self) -> usize {
        self.values.len() - 1
    }

    /// `T(n; s)` for any integer `n`, zero beyond the truncation.
    pub fn at(&self, n: i64) -> f64 {
        self.values.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// The full symmetric kernel `T(-N..=N)`.
    pub fn full(&self) -> Vec<f64> {
        let n = self.half_width() as i64;
        (-n..=n).map(|i| self.at(i)).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values[0] + 2.0 * self.values[1..].iter().sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.values.iter().enumerate().map(|(n, v)| (n * n) as f64 * v).sum::<f64>()
    }
}

/// Builds the discrete Gaussian kernel for variance `s`.
pub fn discrete_gaussian_kernel(s: f64, eps: f64) -> Result<DiscreteGaussian> {
    DiscreteGaussian::new(s, eps)
}

/// Spatial variance in pixels squared for a scale `sigma_x` in degrees at `p` pixels/degree.
pub fn sigma_to_pixel_variance(sigma_x: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::param(format!("pixels per degree must be positive, got {p}")));
    }
    Ok(p * p * sigma_x * sigma_x)
}

/// Reflects index `i` into `0..n` about the edge samples.
pub fn mirror(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m >= n as isize { period - m } else { m }) as usize
}

fn convolve_line(src: &[f64], dst: &mut [f64], kernel: &DiscreteGaussian, padded: &mut Vec<f64>) {
    let n = src.len();
    let half = kernel.half_width();
    padded.clear();
    padded.extend((0..n + 2 * half).map(|i| src[mirror(i as isize - half as isize, n)]));
    let t = &kernel.values;
    for (x, out) in dst.iter_mut().enumerate() {
        let c = x + half;
        let mut acc = t[0] * padded[c];
        for k in 1..=half {
            acc += t[k] * (padded[c - k] + padded[c + k]);
        }
        *out = acc;
    }
}

fn convolve_rows(img: &Image, kernel: &DiscreteGaussian) -> Image {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w.max(1))
        .enumerate()
        .for_each_init(Vec::new, |padded, (y, row)| convolve_line(img.row(y), row, kernel, padded));
    Image::new(w, h, out).expect("dimensions preserved")
}

fn transpose(img: &Image) -> Image {
    let (w, h) = img.dims();
    Image::from_fn(h, w, |x, y| img.get(y, x))
}

/// Separable smoothing with an already built kernel: rows first, then columns.
pub fn smooth_with(img: &Image, kernel: &DiscreteGaussian) -> Image {
    if kernel.half_width() == 0 && kernel.values[0] == 1.0 {
        return img.clone();
    }
    let rows = convolve_rows(img, kernel);
    transpose(&convolve_rows(&transpose(&rows), kernel))
}

/// Separable discrete Gaussian smoothing at variance `s`.
pub fn smooth_separable(img: &Image, s: f64, eps: f64) -> Result<Image> {
    Ok(smooth_with(img, &DiscreteGaussian::new(s, eps)?))
}

/// One-dimensional smoothing along the diagonal `(1, dy)` with `dy = +1` or `-1`.
fn smooth_diagonal(img: &Image, kernel: &DiscreteGaussian, dy: isize) -> Image {
    let (w, h) = img.dims();
    let half = kernel.half_width() as isize;
    let t = &kernel.values;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let at = |k: isize| img.get(mirror(x as isize + k, w), mirror(y as isize + dy * k, h));
            let mut acc = t[0] * at(0);
            for k in 1..=half {
                acc += t[k as usize] * (at(-k) + at(k));
            }
            *o = acc;
        }
    });
    Image::new(w, h, out).expect("dimensions preserved")
}

/// Smoothing with improved rotational symmetry: diagonal passes at `s/6` along
/// each diagonal followed by a Cartesian separable pass at `2s/3`.
///
/// A diagonal pass of variance `v` adds `v` to the variance along both axes,
/// so the per-axis total is `2 s/6 + 2s/3 = s`.
pub fn smooth_gamma_third(img: &Image, s: f64, eps: f64) -> Result<Image> {
    let diagonal = DiscreteGaussian::new(s / 6.0, eps)?;
    let cartesian = DiscreteGaussian::new(2.0 * s / 3.0, eps)?;
    let d = smooth_diagonal(&smooth_diagonal(img, &diagonal, 1), &diagonal, -1);
    Ok(smooth_with(&d, &cartesian))
}

/// Which spatial smoothing scheme to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingScheme {
    Separable,
    GammaThird,
}

/// Smooths with the chosen scheme.
pub fn smooth(img: &Image, s: f64, eps: f64, scheme: SmoothingScheme) -> Result<Image> {
    match scheme {
        SmoothingScheme::Separable => smooth_separable(img, s, eps),
        SmoothingScheme::GammaThird => smooth_gamma_third(img, s, eps),
    }
}

/// Spatial difference operator `delta_x^mx delta_y^my`.
///
/// Odd orders use `(-1/2, 0, 1/2)`, pairs of orders use `(1, -2, 1)`; the mixed
/// first-order operator is evaluated from the four corner samples directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpatialOp {
    pub mx: u8,
    pub my: u8,
}

impl SpatialOp {
    pub const DX: SpatialOp = SpatialOp { mx: 1, my: 0 };
    pub const DY: SpatialOp = SpatialOp { mx: 0, my: 1 };
    pub const DXX: SpatialOp = SpatialOp { mx: 2, my: 0 };
    pub const DYY: SpatialOp = SpatialOp { mx: 0, my: 2 };
    pub const DXY: SpatialOp = SpatialOp { mx: 1, my: 1 };

    pub fn new(mx: u8, my: u8) -> Self {
        SpatialOp { mx, my }
    }

    pub fn order(&self) -> u8 {
        self.mx + self.my
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn first_difference(img: &Image, axis: Axis) -> Image {
    let (w, h) = img.dims();
    Image::from_fn(w, h, |x, y| {
        let (a, b) = match axis {
            Axis::X => (img.get(mirror(x as isize + 1, w), y), img.get(mirror(x as isize - 1, w), y)),
            Axis::Y => (img.get(x, mirror(y as isize + 1, h)), img.get(x, mirror(y as isize - 1, h))),
        };
        (a - b) / 2.0
    })
}

fn second_difference(img: &Image, axis: Axis) -> Image {
    let (w, h) = img.dims();
    Image::from_fn(w, h, |x, y| {
        let (a, b) = match axis {
            Axis::X => (img.get(mirror(x as isize + 1, w), y), img.get(mirror(x as isize - 1, w), y)),
            Axis::Y => (img.get(x, mirror(y as isize + 1, h)), img.get(x, mirror(y as isize - 1, h))),
        };
        (a + b) - 2.0 * img.get(x, y)
    })
}

fn mixed_difference(img: &Image) -> Image {
    let (w, h) = img.dims();
    Image::from_fn(w, h, |x, y| {
        let (xp, xm) = (mirror(x as isize + 1, w), mirror(x as isize - 1, w));
        let (yp, ym) = (mirror(y as isize + 1, h), mirror(y as isize - 1, h));
        ((img.get(xp, yp) + img.get(xm, ym)) - (img.get(xp, ym) + img.get(xm, yp))) / 4.0
    })
}

fn along(img: &Image, order: u8, axis: Axis) -> Image {
    let mut out = if order % 2 == 1 { first_difference(img, axis) } else { img.clone() };
    for _ in 0..order / 2 {
        out = second_difference(&out, axis);
    }
    out
}

/// Applies a spatial difference operator with mirrored boundaries.
pub fn spatial_difference(img: &Image, op: SpatialOp) -> Result<Image> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::param(format!(
            "differences need at least 3x3 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    if op.mx % 2 == 1 && op.my % 2 == 1 {
        let core = mixed_difference(img);
        return Ok(along(&along(&core, op.mx - 1, Axis::X), op.my - 1, Axis::Y));
    }
    Ok(along(&along(img, op.mx, Axis::X), op.my, Axis::Y))
}
