//! Continuous composed kernels of truncated exponential cascades, their
//! derivatives, the scale-invariant limit kernel, cumulants and the
//! log-time (scale-time) kernel used for comparison.

mod cascade;
mod cumulants;
mod koenderink;

pub use cascade::{
    delay_report, evaluate_cascade_kernel, evaluate_gamma_kernel, fourier_cascade, kernel_derivative_samples,
    limit_kernel_samples, tmax_numeric, CascadeKernel,
};
pub use cumulants::{cumulants_logarithmic, cumulants_of, cumulants_uniform, CumulantReport, StageCount};
pub use koenderink::{
    koenderink_kernel, koenderink_map_finite_k, koenderink_map_inverse, koenderink_map_limit, KoenderinkParams,
};

/// Uniformly spaced samples of a causal kernel or one of its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel {
    pub values: Vec<f64>,
    pub dt: f64,
    pub t0: f64,
    pub order: usize,
}

/// Mass, mean and central moments of a sampled kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mass: f64,
    pub mean: f64,
    /// Central moments of order 2, 3 and 4.
    pub central: [f64; 3],
}

impl SampleMoments {
    pub fn skewness(&self) -> f64 {
        self.central[1] / self.central[0].powf(1.5)
    }

    /// Excess kurtosis, matching the fourth standardized cumulant.
    pub fn kurtosis(&self) -> f64 {
        self.central[2] / (self.central[0] * self.central[0]) - 3.0
    }
}

impl SampledKernel {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Composite Simpson integral of `weight(t) * value` over the sampled range.
    fn integrate_weighted(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let f: Vec<f64> = self.values.iter().enumerate().map(|(i, v)| weight(self.time(i)) * v).collect();
        simpson(&f, self.dt)
    }

    /// Integral of the kernel over the sampled range.
    pub fn integral(&self) -> f64 {
        self.integrate_weighted(|_| 1.0)
    }

    /// Mass, mean and central moments computed by quadrature.
    pub fn moments(&self) -> SampleMoments {
        let mass = self.integral();
        let mean = self.integrate_weighted(|t| t) / mass;
        let central = [2, 3, 4].map(|k| self.integrate_weighted(|t| (t - mean).powi(k)) / mass);
        SampleMoments { mass, mean, central }
    }

    /// Continuous `L_p` norm by the trapezoidal rule.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let f: Vec<f64> = self.values.iter().map(|v| v.abs().powf(p)).collect();
        trapezoid(&f, self.dt).powf(1.0 / p)
    }

    /// Index of the largest sample.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

pub(crate) fn trapezoid(f: &[f64], dt: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => dt * (f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1])),
    }
}

pub(crate) fn simpson(f: &[f64], dt: f64) -> f64 {
    let n = f.len();
    if n < 3 {
        return trapezoid(f, dt);
    }
    // Simpson needs an even number of intervals; a leftover one is closed with
    // the 3/8 rule over the final three intervals.
    let intervals = n - 1;
    let (even_end, tail) = if intervals.is_multiple_of(2) { (n - 1, false) } else { (n - 4, true) };
    let mut total = 0.0;
    if even_end > 0 {
        let mut acc = f[0] + f[even_end];
        for (i, v) in f.iter().enumerate().take(even_end).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        total = acc * dt / 3.0;
    }
    if tail {
        let j = even_end;
        total += 3.0 * dt / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
    }
    total
}
