use crate::error::{Error, Result};
use crate::scales::ScaleDistribution;

/// Finite cascade or the infinite logarithmic limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageCount {
    Finite(usize),
    Limit,
}

/// Cumulants, moments and shape measures of a composed kernel.
///
/// `moments[0]` is the mean, `moments[1..]` the central moments of order 2..4.
/// `gamma2` is the excess kurtosis `kappa4 / kappa2^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantReport {
    pub kappa: [f64; 4],
    pub moments: [f64; 4],
    pub gamma1: f64,
    pub gamma2: f64,
}

impl CumulantReport {
    /// Builds the report from power sums `sum(mu^n)`, n = 1..4.
    ///
    /// Each truncated exponential stage contributes `(n-1)! mu^n` to the n-th cumulant.
    fn from_power_sums(p: [f64; 4]) -> Self {
        let kappa = [p[0], p[1], 2.0 * p[2], 6.0 * p[3]];
        let moments = [kappa[0], kappa[1], kappa[2], kappa[3] + 3.0 * kappa[1] * kappa[1]];
        CumulantReport {
            kappa,
            moments,
            gamma1: kappa[2] / kappa[1].powf(1.5),
            gamma2: kappa[3] / (kappa[1] * kappa[1]),
        }
    }
}

/// Cumulants of an arbitrary cascade from its time constants.
pub fn cumulants_of(dist: &ScaleDistribution) -> CumulantReport {
    let p = [1, 2, 3, 4].map(|n| dist.mus.iter().map(|m| m.powi(n)).sum());
    CumulantReport::from_power_sums(p)
}

/// Closed-form cumulants of the logarithmic cascade, finite or in the limit.
pub fn cumulants_logarithmic(tau: f64, c: f64, stages: StageCount) -> Result<CumulantReport> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::param(format!("distribution parameter c must exceed 1, got {c}")));
    }
    if !(tau > 0.0) {
        return Err(Error::param(format!("temporal variance must be positive, got {tau}")));
    }
    let spread2 = c * c - 1.0;
    let p = [1i32, 2, 3, 4].map(|n| {
        let nf = n as f64;
        let scale = tau.powf(nf / 2.0);
        let geometric = spread2.powf(nf / 2.0) / (c.powi(n) - 1.0);
        match stages {
            StageCount::Limit => scale * geometric,
            StageCount::Finite(k) => {
                let k = k as i32;
                scale * (c.powi(n * (1 - k)) + geometric * (1.0 - c.powi(-n * (k - 1))))
            }
        }
    });
    if let StageCount::Finite(0) = stages {
        return Err(Error::param("number of scale levels must be at least 1"));
    }
    Ok(CumulantReport::from_power_sums(p))
}

/// Closed-form cumulants of the uniform cascade (a Gamma density).
pub fn cumulants_uniform(tau: f64, stages: usize) -> Result<CumulantReport> {
    if stages == 0 {
        return Err(Error::param("number of scale levels must be at least 1"));
    }
    let k = stages as f64;
    let p = [1i32, 2, 3, 4].map(|n| k * (tau / k).powf(n as f64 / 2.0));
    let mut report = CumulantReport::from_power_sums(p);
    report.gamma1 = 2.0 / k.sqrt();
    report.gamma2 = 6.0 / k;
    report.moments[1] = tau;
    Ok(report)
}
