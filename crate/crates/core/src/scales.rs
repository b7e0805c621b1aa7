//! Distributions of temporal scale levels and the time constants of the
//! first-order integrators that realize them.
//!
//! Time units are abstract here. Conversion from seconds to frames lives in
//! [`crate::recursive`].

use crate::error::{Error, Result};

/// How the scale levels of a cascade were generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionKind {
    Uniform,
    Logarithmic {
        c: f64,
    },
    /// Logarithmic cascade continued towards the scale-invariant limit and cut
    /// after the first `K` stages whose residual variance drops below `eps`.
    TruncatedLimit {
        c: f64,
        eps: f64,
    },
    /// Arbitrary positive time constants supplied by the caller.
    Explicit,
}

impl DistributionKind {
    pub fn c(&self) -> Option<f64> {
        match *self {
            DistributionKind::Logarithmic { c } | DistributionKind::TruncatedLimit { c, .. } => Some(c),
            _ => None,
        }
    }
}

/// Scale levels `tau_1 < ... < tau_K = tau_max` and the matching time constants.
///
/// Adding a first-order integrator with time constant `mu` to a cascade adds
/// `mu^2` to its temporal variance, so `levels[k] = sum(mus[..=k]^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleDistribution {
    pub kind: DistributionKind,
    pub tau_max: f64,
    pub levels: Vec<f64>,
    pub mus: Vec<f64>,
}

/// How a delay estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMethod {
    ClosedForm,
    Numeric,
    KoenderinkEstimate,
}

/// Temporal mean and position of the kernel maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayReport {
    pub temporal_mean: f64,
    pub tmax: f64,
    pub method: DelayMethod,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::param(format!("temporal variance must be positive, got {tau}")));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::param(format!("distribution parameter c must exceed 1, got {c}")));
    }
    Ok(())
}

fn check_stages(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::param("number of scale levels must be at least 1"));
    }
    Ok(())
}

fn cumulative_levels(mus: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    mus.iter()
        .map(|m| {
            acc += m * m;
            acc
        })
        .collect()
}

/// Uniformly spaced levels `tau_k = k tau / K`, all time constants equal.
pub fn uniform_time_constants(tau_max: f64, stages: usize) -> Result<ScaleDistribution> {
    check_tau(tau_max)?;
    check_stages(stages)?;
    let mu = (tau_max / stages as f64).sqrt();
    let levels = (1..=stages).map(|k| k as f64 * tau_max / stages as f64).collect();
    Ok(ScaleDistribution { kind: DistributionKind::Uniform, tau_max, levels, mus: vec![mu; stages] })
}

/// Geometrically spaced levels `tau_k = c^(2(k-K)) tau_max`.
pub fn logarithmic_time_constants(tau_max: f64, c: f64, stages: usize) -> Result<ScaleDistribution> {
    check_tau(tau_max)?;
    check_c(c)?;
    check_stages(stages)?;
    let k_max = stages as i32;
    let root_tau = tau_max.sqrt();
    let spread = (c * c - 1.0).sqrt();
    let mus = (1..=k_max)
        .map(|k| if k == 1 { c.powi(1 - k_max) * root_tau } else { c.powi(k - k_max - 1) * spread * root_tau })
        .collect();
    let levels = (1..=k_max).map(|k| c.powi(2 * (k - k_max)) * tau_max).collect();
    Ok(ScaleDistribution { kind: DistributionKind::Logarithmic { c }, tau_max, levels, mus })
}

/// Logarithmic distribution whose finest level is `tau_min`.
pub fn logarithmic_from_min_scale(tau_min: f64, tau_max: f64, stages: usize) -> Result<ScaleDistribution> {
    check_tau(tau_min)?;
    if tau_min >= tau_max {
        return Err(Error::param(format!("tau_min {tau_min} must be below tau_max {tau_max}")));
    }
    if stages < 2 {
        return Err(Error::param("a minimum scale needs at least 2 levels"));
    }
    let c = (tau_max / tau_min).powf(1.0 / (2.0 * (stages as f64 - 1.0)));
    if c <= 1.0 + 1e-12 {
        return Err(Error::param(format!("levels too close: c = {c} is not above 1")));
    }
    logarithmic_time_constants(tau_max, c, stages)
}

/// Number of stages of the truncated limit cascade for a residual variance `eps * tau`.
pub fn limit_stage_count(c: f64, eps: f64) -> Result<usize> {
    check_c(c)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    // The stages beyond K carry variance c^(-2K) tau in total.
    let mut k = 1usize;
    while c.powi(-2 * k as i32) >= eps {
        k += 1;
    }
    Ok(k)
}

/// Leading stages of the infinite logarithmic cascade, `mu_k = c^-k sqrt(c^2-1) sqrt(tau)`.
///
/// The total variance falls short of `tau` by less than `eps * tau`.
pub fn truncated_limit_time_constants(tau: f64, c: f64, eps: f64) -> Result<ScaleDistribution> {
    check_tau(tau)?;
    let stages = limit_stage_count(c, eps)?;
    let spread = (c * c - 1.0).sqrt() * tau.sqrt();
    // Finest scale first, to match the other constructors.
    let mus: Vec<f64> = (1..=stages as i32).rev().map(|k| c.powi(-k) * spread).collect();
    let levels = cumulative_levels(&mus);
    Ok(ScaleDistribution {
        kind: DistributionKind::TruncatedLimit { c, eps },
        tau_max: *levels.last().unwrap(),
        levels,
        mus,
    })
}

/// Cascade built from caller-supplied time constants.
pub fn explicit_time_constants(mus: &[f64]) -> Result<ScaleDistribution> {
    if mus.is_empty() {
        return Err(Error::param("empty list of time constants"));
    }
    if let Some(bad) = mus.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::param(format!("time constants must be positive, got {bad}")));
    }
    let levels = cumulative_levels(mus);
    Ok(ScaleDistribution {
        kind: DistributionKind::Explicit,
        tau_max: *levels.last().unwrap(),
        levels,
        mus: mus.to_vec(),
    })
}

impl ScaleDistribution {
    pub fn stages(&self) -> usize {
        self.mus.len()
    }

    /// Temporal mean `sum(mu)` and variance `sum(mu^2)` of the composed kernel.
    pub fn mean_variance(&self) -> (f64, f64) {
        composed_mean_variance(self)
    }

    /// The same distribution with every level multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<ScaleDistribution> {
        check_tau(factor)?;
        let root = factor.sqrt();
        Ok(ScaleDistribution {
            kind: self.kind,
            tau_max: self.tau_max * factor,
            levels: self.levels.iter().map(|l| l * factor).collect(),
            mus: self.mus.iter().map(|m| m * root).collect(),
        })
    }
}

/// Temporal mean and variance of the composed kernel.
pub fn composed_mean_variance(dist: &ScaleDistribution) -> (f64, f64) {
    let m = dist.mus.iter().sum();
    let tau = dist.mus.iter().map(|m| m * m).sum();
    (m, tau)
}

/// Closed-form temporal mean of the logarithmic cascade.
pub fn mean_logarithmic(tau: f64, c: f64, stages: usize) -> Result<f64> {
    check_tau(tau)?;
    check_c(c)?;
    check_stages(stages)?;
    let spread = (c * c - 1.0).sqrt();
    let k = stages as i32;
    let inner = c * c - (spread + 1.0) * c + spread * c.powi(k);
    Ok(c.powi(-k) * inner / (c - 1.0) * tau.sqrt())
}

/// Closed-form temporal mean `sqrt(K tau)` of the uniform cascade.
pub fn mean_uniform(tau: f64, stages: usize) -> f64 {
    (stages as f64 * tau).sqrt()
}

/// Temporal mean of the logarithmic cascade as the number of stages grows.
pub fn delay_limit_logarithmic(tau: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(((c + 1.0) / (c - 1.0)).sqrt() * tau.sqrt())
}

/// Position of the maximum of the uniform cascade (a Gamma density).
pub fn tmax_uniform(tau: f64, stages: usize) -> f64 {
    let k = stages as f64;
    (k - 1.0) / k.sqrt() * tau.sqrt()
}
