use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::scales;

/// Parameters of the log-time Gaussian kernel: log-scale `sigma` and delay `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoenderinkParams {
    pub sigma: f64,
    pub delta: f64,
}

/// Log-time Gaussian kernel, normalized to unit integral over `t > 0`.
pub fn koenderink_kernel(t: f64, sigma: f64, delta: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let l = (t / delta).ln();
    (-l * l / (2.0 * sigma * sigma) - sigma * sigma / 2.0).exp() / ((2.0 * PI).sqrt() * sigma * delta)
}

impl KoenderinkParams {
    /// Mean followed by the central moments of order 2, 3 and 4.
    pub fn moments(&self) -> [f64; 4] {
        let s2 = self.sigma * self.sigma;
        let e = s2.exp();
        let d = self.delta;
        [
            d * (1.5 * s2).exp(),
            d * d * (3.0 * s2).exp() * (e - 1.0),
            d.powi(3) * (4.5 * s2).exp() * (e - 1.0).powi(2) * (e + 2.0),
            d.powi(4) * (6.0 * s2).exp() * (e - 1.0).powi(2) * (3.0 * e * e + 2.0 * e.powi(3) + e.powi(4) - 3.0),
        ]
    }

    pub fn skewness(&self) -> f64 {
        let e = (self.sigma * self.sigma).exp();
        (e - 1.0).sqrt() * (e + 2.0)
    }

    /// Excess kurtosis.
    pub fn kurtosis(&self) -> f64 {
        let e = (self.sigma * self.sigma).exp();
        3.0 * e * e + 2.0 * e.powi(3) + e.powi(4) - 6.0
    }

    /// Position of the kernel maximum, which sits at `delta`.
    pub fn tmax(&self) -> f64 {
        self.delta
    }
}

/// Parameters matching mean and variance of the infinite logarithmic cascade.
pub fn koenderink_map_limit(tau: f64, c: f64) -> Result<KoenderinkParams> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::param(format!("distribution parameter c must exceed 1, got {c}")));
    }
    if !(tau > 0.0) {
        return Err(Error::param(format!("temporal variance must be positive, got {tau}")));
    }
    let sigma = (2.0 * c / (c + 1.0)).ln().sqrt();
    let delta = (c + 1.0).powi(2) * tau.sqrt() / (2.0 * SQRT_2 * ((c - 1.0) * c.powi(3)).sqrt());
    Ok(KoenderinkParams { sigma, delta })
}

/// Inverse of [`koenderink_map_limit`], returning `(tau, c)`.
pub fn koenderink_map_inverse(params: KoenderinkParams) -> Result<(f64, f64)> {
    let KoenderinkParams { sigma, delta } = params;
    if !(sigma > 0.0 && delta > 0.0) {
        return Err(Error::Domain(format!("sigma and delta must be positive, got ({sigma}, {delta})")));
    }
    if sigma * sigma >= LN_2 {
        return Err(Error::Domain(format!("sigma {sigma} has no logarithmic counterpart (needs sigma < sqrt(ln 2))")));
    }
    let e = (sigma * sigma).exp();
    let tau = delta * delta * (3.0 * sigma * sigma).exp() * (e - 1.0);
    let c = e / (2.0 - e);
    Ok((tau, c))
}

/// Parameters matching mean and variance of the `K`-stage logarithmic cascade.
///
/// The closed form is evaluated with every power divided by `c^(4K)` so that
/// large `K` neither overflows nor loses precision. Where the common factor of
/// numerator and denominator vanishes the moment equations are solved directly.
pub fn koenderink_map_finite_k(tau: f64, c: f64, stages: usize) -> Result<KoenderinkParams> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::param(format!("distribution parameter c must exceed 1, got {c}")));
    }
    if !(tau > 0.0) {
        return Err(Error::param(format!("temporal variance must be positive, got {tau}")));
    }
    if stages < 2 {
        return Err(Error::param("the finite map needs at least 2 stages"));
    }
    let s = (c * c - 1.0).sqrt();
    let x = c.powi(-(stages as i32));
    let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
    let (c2, c3) = (c * c, c * c * c);

    let p = 1.0 - 4.0 * c2 * x3 - 4.0 * c3 * x3 + 3.0 * c3 * x2 - 3.0 * c2 * x + c + 2.0 * c3 * x4 + (s - 1.0) * x
        - (s - 4.0) * c * x2
        + (s + 5.0) * c2 * x2
        - (s + 4.0) * c * x;
    let b_root = 1.0 - 2.0 * c * x - 2.0 * c2 * x + c + 2.0 * c2 * x2;
    let b = b_root * b_root;

    if b_root.abs() < 1e-8 {
        return moment_matched(tau, c, stages);
    }
    let log_ratio = 2.0 * c * p / b;
    let var_ratio = c * p / b;
    let head = c2 * x - (s + 1.0) * c * x + s;
    if !(log_ratio > 1.0) || !(var_ratio > 0.0) || !(head > 0.0) {
        return Err(Error::Domain(format!("no log-time parameters for c={c}, K={stages}")));
    }
    let sigma = log_ratio.ln().sqrt();
    let delta = head * tau.sqrt() / (2.0 * SQRT_2 * (c - 1.0) * var_ratio.powf(1.5));
    Ok(KoenderinkParams { sigma, delta })
}

/// Direct solution of `delta e^(3 sigma^2 / 2) = m` and the matching variance equation.
fn moment_matched(tau: f64, c: f64, stages: usize) -> Result<KoenderinkParams> {
    let m = scales::mean_logarithmic(tau, c, stages)?;
    let sigma2 = (1.0 + tau / (m * m)).ln();
    Ok(KoenderinkParams { sigma: sigma2.sqrt(), delta: m * (-1.5 * sigma2).exp() })
}
