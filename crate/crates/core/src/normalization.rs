//! Scale normalization of temporal and spatial derivatives.
//!
//! Variance-based normalization multiplies an `n`-th order temporal derivative
//! by `tau^(n gamma / 2)`. `L_p` normalization instead chooses the factor that
//! gives the derivative kernel the same `L_p` norm as the corresponding
//! Gaussian derivative kernel, with `p = 1 / (1 + n (1 - gamma))`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::kernels::{kernel_derivative_samples, SampledKernel};
use crate::quad;
use crate::recursive::{impulse_response, RecursiveCascade};
use crate::scales::{self, ScaleDistribution};

/// Tail mass left out of discrete impulse responses when measuring their norms.
pub const IMPULSE_TAIL_EPS: f64 = 1e-10;

/// Reference cascade lengths standing in for the infinite cascade.
pub const K_REF_UNIFORM: usize = 1000;
pub const K_REF_LOGARITHMIC: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Variance,
    Lp,
}

/// Normalization mode and exponents for spatial and temporal derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationSpec {
    pub mode: NormMode,
    pub gamma_s: f64,
    pub gamma_tau: f64,
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        NormalizationSpec { mode: NormMode::Variance, gamma_s: 1.0, gamma_tau: 1.0 }
    }
}

impl NormalizationSpec {
    /// Temporal factor for derivatives of order `n` computed with `cascade`.
    pub fn temporal_factor(&self, cascade: &RecursiveCascade, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        match self.mode {
            NormMode::Variance => Ok(variance_norm_factor(cascade.variance(), n, self.gamma_tau)),
            NormMode::Lp => lp_norm_factor_discrete(cascade, n, self.gamma_tau),
        }
    }
}

/// Norm exponent paired with derivative order `n` and exponent `gamma`.
pub fn p_from_gamma(n: usize, gamma: f64) -> f64 {
    1.0 / (1.0 + n as f64 * (1.0 - gamma))
}

/// `tau^(n gamma / 2)`.
pub fn variance_norm_factor(tau: f64, n: usize, gamma_tau: f64) -> f64 {
    tau.powf(n as f64 * gamma_tau / 2.0)
}

/// `s^(gamma_s (m1 + m2) / 2)`.
pub fn spatial_norm_factor(s: f64, m1: usize, m2: usize, gamma_s: f64) -> f64 {
    s.powf(gamma_s * (m1 + m2) as f64 / 2.0)
}

/// `L_1` norms of the first four unit-variance Gaussian derivative kernels.
pub const GAUSSIAN_DERIVATIVE_L1: [f64; 4] =
    [0.797_884_560_802_865_4, 0.967_882_898_076_573_5, 1.510_013_000_130_477, 2.800_600_300_829_836_4];

/// Closed forms behind [`GAUSSIAN_DERIVATIVE_L1`].
pub fn gaussian_derivative_l1_closed_form(n: usize) -> Option<f64> {
    let r = (2.0 / PI).sqrt();
    match n {
        1 => Some(r),
        2 => Some((8.0 / (PI * E)).sqrt()),
        3 => Some(r * (1.0 + 4.0 * (-1.5f64).exp())),
        4 => {
            let s6 = 6f64.sqrt();
            let front = 4.0 * 3f64.sqrt() / ((1.5 + 1.5f64.sqrt()).exp() * PI.sqrt());
            Some(front * ((3.0 - s6).sqrt() * s6.exp() + (3.0 + s6).sqrt()))
        }
        _ => None,
    }
}

/// Probabilists' Hermite polynomial; `d^n/dx^n g(x) = (-1)^n He_n(x) g(x)` for the unit Gaussian.
fn hermite(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `L_p` norm of the `n`-th derivative of the unit-variance Gaussian by quadrature.
pub fn gaussian_derivative_norm_quadrature(n: usize, gamma: f64) -> f64 {
    let p = p_from_gamma(n, gamma);
    let norm = (2.0 * PI).sqrt();
    let f = |x: f64| (hermite(n, x) * (-x * x / 2.0).exp() / norm).abs().powf(p);
    let roots = quad::bracketed_roots(&|x| hermite(n, x), -12.0, 12.0, 4000);
    quad::integrate_piecewise(&f, -12.0, 12.0, &roots, 1e-13).powf(1.0 / p)
}

/// `G_{n,gamma}`: the `L_p` norm of the scale-normalized Gaussian derivative of order `n`.
///
/// The scale-normalized norm is independent of the scale, so it is evaluated at unit variance.
pub fn gaussian_derivative_norm(n: usize, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("derivative order must be at least 1"));
    }
    if gamma == 1.0 && n <= 4 {
        return Ok(GAUSSIAN_DERIVATIVE_L1[n - 1]);
    }
    Ok(gaussian_derivative_norm_quadrature(n, gamma))
}

/// Discrete `l_p` norm of the `n`-th backward difference of a causal sequence.
///
/// The sequence is padded with zeros on both sides so the jumps at the start
/// and at the truncated tail are counted.
pub fn difference_lp_norm(values: &[f64], n: usize, p: f64) -> f64 {
    let mut d = vec![0.0; n];
    d.extend_from_slice(values);
    d.extend(std::iter::repeat_n(0.0, n));
    for _ in 0..n {
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    d.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `alpha_{n,gamma}(tau) = G_{n,gamma} / ||delta_t^n h||_p` for the discrete cascade.
pub fn lp_norm_factor_discrete(cascade: &RecursiveCascade, n: usize, gamma_tau: f64) -> Result<f64> {
    let g = gaussian_derivative_norm(n, gamma_tau)?;
    let h = impulse_response(cascade, IMPULSE_TAIL_EPS)?;
    Ok(g / difference_lp_norm(&h.values, n, p_from_gamma(n, gamma_tau)))
}

/// Same factor for the continuous kernel, from its sampled derivative.
pub fn lp_norm_factor_continuous(
    dist: &ScaleDistribution,
    n: usize,
    gamma_tau: f64,
    dt: f64,
    horizon: f64,
) -> Result<f64> {
    let g = gaussian_derivative_norm(n, gamma_tau)?;
    let kernel: SampledKernel = kernel_derivative_samples(dist, n, dt, horizon)?;
    Ok(g / kernel.lp_norm(p_from_gamma(n, gamma_tau)))
}

/// Discrete cascade for variance `tau` (frame units), uniform when `c` is `None`.
pub fn discrete_cascade(tau: f64, c: Option<f64>, stages: usize) -> Result<RecursiveCascade> {
    let dist = match c {
        None => scales::uniform_time_constants(tau, stages)?,
        Some(c) => scales::logarithmic_time_constants(tau, c, stages)?,
    };
    RecursiveCascade::from_distribution(&dist)
}

/// Relative deviation of the `L_1` factor at `K` stages from its value at `k_ref` stages.
pub fn deviation_from_limit(n: usize, tau: f64, c: Option<f64>, stages: usize, k_ref: usize) -> Result<f64> {
    let at_k = lp_norm_factor_discrete(&discrete_cascade(tau, c, stages)?, n, 1.0)?;
    let at_ref = lp_norm_factor_discrete(&discrete_cascade(tau, c, k_ref)?, n, 1.0)?;
    Ok((at_k - at_ref).abs() / at_ref)
}

/// Default reference length for [`deviation_from_limit`].
pub fn default_k_ref(c: Option<f64>) -> usize {
    if c.is_some() {
        K_REF_LOGARITHMIC
    } else {
        K_REF_UNIFORM
    }
}
