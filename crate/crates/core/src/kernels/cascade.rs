use num_complex::Complex64;

use super::SampledKernel;
use crate::error::{Error, Result};
use crate::scales::{self, DelayMethod, DelayReport, DistributionKind, ScaleDistribution};

/// Time constants closer than this (relative) share one confluent pole.
const POLE_MERGE_TOL: f64 = 1e-5;
/// Terms kept in the small-argument series.
const SERIES_TERMS: usize = 160;
/// The series is tried while `t * max_rate` stays below this.
const SERIES_MAX_ARG: f64 = 40.0;

#[derive(Debug, Clone)]
struct PoleGroup {
    rate: f64,
    /// `(ln |c_r|, sign c_r)` for the terms `c_r t^(r-1)/(r-1)! e^(-rate t)`, r = 1..=multiplicity.
    terms: Vec<(f64, f64)>,
}

/// Closed-form evaluator for the convolution of truncated exponential kernels.
///
/// The Laplace transform `prod 1/(1 + mu_k s)` is expanded in partial
/// fractions over distinct poles. Repeated time constants give confluent terms
/// `t^m e^(-t/mu)`, so equal time constants need no perturbation.
#[derive(Debug, Clone)]
pub struct CascadeKernel {
    groups: Vec<PoleGroup>,
    /// Fastest rate; the small-argument series is expanded in `t * max_rate`.
    max_rate: f64,
    ln_rate_product: f64,
    /// `ln h_m(rates / max_rate)` for the complete homogeneous symmetric polynomials.
    ln_homogeneous: Vec<f64>,
    ln_factorial: Vec<f64>,
    stages: usize,
    mean: f64,
}

fn ln_binomial(n: usize, k: usize, ln_factorial: &[f64]) -> f64 {
    ln_factorial[n] - ln_factorial[k] - ln_factorial[n - k]
}

fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

impl CascadeKernel {
    pub fn new(mus: &[f64]) -> Result<Self> {
        if mus.is_empty() {
            return Err(Error::param("empty list of time constants"));
        }
        if let Some(bad) = mus.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::param(format!("time constants must be positive, got {bad}")));
        }
        let mut sorted = mus.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // (sum of mus, multiplicity) per cluster
        let mut clusters: Vec<(f64, usize)> = Vec::new();
        for &mu in &sorted {
            match clusters.last_mut() {
                Some((sum, count)) if (mu - *sum / *count as f64) <= POLE_MERGE_TOL * mu => {
                    *sum += mu;
                    *count += 1;
                }
                _ => clusters.push((mu, 1)),
            }
        }
        let poles: Vec<(f64, usize)> = clusters.iter().map(|&(sum, m)| (m as f64 / sum, m)).collect();

        let groups = poles
            .iter()
            .enumerate()
            .map(|(g, &(rate, mult))| {
                let mut log_scale = mult as f64 * rate.ln();
                let mut sign = 1.0;
                // Taylor coefficients around s = -rate of prod_{h != g} (1 + u/d_h)^(-m_h)
                let mut taylor = vec![0.0; mult];
                taylor[0] = 1.0;
                for (h, &(other, m_other)) in poles.iter().enumerate() {
                    if h == g {
                        continue;
                    }
                    let d = other - rate;
                    log_scale += m_other as f64 * (other.ln() - d.abs().ln());
                    if d < 0.0 && m_other % 2 == 1 {
                        sign = -sign;
                    }
                    if mult > 1 {
                        let mut series = vec![1.0; mult];
                        for j in 1..mult {
                            series[j] = series[j - 1] * (-((m_other + j - 1) as f64) / (j as f64 * d));
                        }
                        let prev = taylor.clone();
                        for (i, out) in taylor.iter_mut().enumerate() {
                            *out = (0..=i).map(|j| prev[i - j] * series[j]).sum();
                        }
                    }
                }
                let terms = (1..=mult)
                    .map(|r| {
                        let a = taylor[mult - r];
                        if a == 0.0 {
                            (f64::NEG_INFINITY, 0.0)
                        } else {
                            (log_scale + a.abs().ln(), sign * a.signum())
                        }
                    })
                    .collect();
                PoleGroup { rate, terms }
            })
            .collect();

        let max_rate = 1.0 / sorted[0];
        let mut homogeneous = vec![0.0; SERIES_TERMS];
        homogeneous[0] = 1.0;
        for &mu in &sorted {
            let x = 1.0 / (mu * max_rate);
            for m in 1..SERIES_TERMS {
                homogeneous[m] += x * homogeneous[m - 1];
            }
        }
        Ok(CascadeKernel {
            groups,
            max_rate,
            ln_rate_product: -mus.iter().map(|m| m.ln()).sum::<f64>(),
            ln_homogeneous: homogeneous.iter().map(|h| h.ln()).collect(),
            ln_factorial: ln_factorial_table(mus.len() + SERIES_TERMS + 8),
            stages: mus.len(),
            mean: mus.iter().sum(),
        })
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Temporal mean (sum of the time constants).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// `n`-th time derivative at `t`, the one-sided limit from the right at `t = 0`.
    pub fn derivative(&self, t: f64, n: usize) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let (sum, magnitude) = self.partial_fraction_sum(t, n);
        if t * self.max_rate < SERIES_MAX_ARG && n < self.stages {
            let (series, series_magnitude) = self.series_sum(t, n);
            if series_magnitude < magnitude {
                return series;
            }
        }
        sum
    }

    /// Power series `prod(r) sum_m (-1)^m h_m(r) t^(K-1+m-n) / (K-1+m-n)!`,
    /// free of the cancellation between poles that the partial fractions suffer near the origin.
    fn series_sum(&self, t: f64, n: usize) -> (f64, f64) {
        let power0 = self.stages - 1 - n;
        if t == 0.0 {
            let v = if power0 == 0 { self.ln_rate_product.exp() } else { 0.0 };
            return (v, v.abs());
        }
        let ln_t = t.ln();
        let ln_u = (t * self.max_rate).ln();
        let ln_prefactor = self.ln_rate_product + power0 as f64 * ln_t;
        let (mut sum, mut magnitude) = (0.0, 0.0);
        for (m, &ln_h) in self.ln_homogeneous.iter().enumerate() {
            let term = (ln_prefactor + ln_h + m as f64 * ln_u - self.ln_factorial[power0 + m]).exp();
            sum += if m % 2 == 1 { -term } else { term };
            magnitude += term;
            if m > 8 && term < 1e-18 * magnitude {
                return (sum, magnitude);
            }
        }
        (sum, f64::INFINITY)
    }

    /// Partial-fraction value and the sum of the absolute values of its terms.
    fn partial_fraction_sum(&self, t: f64, n: usize) -> (f64, f64) {
        let ln_t = t.ln();
        let mut sum = 0.0;
        let mut magnitude = 0.0;
        for group in &self.groups {
            let ln_rate = group.rate.ln();
            let decay = group.rate * t;
            for (q, &(ln_c, sign)) in group.terms.iter().enumerate() {
                if sign == 0.0 {
                    continue;
                }
                // d^n/dt^n [t^q/q! e^(-rate t)] = sum_j C(n,j) (-rate)^(n-j) t^(q-j)/(q-j)! e^(-rate t)
                for j in 0..=n.min(q) {
                    let power = q - j;
                    if power > 0 && t == 0.0 {
                        continue;
                    }
                    let ln_poly = if power > 0 { power as f64 * ln_t } else { 0.0 };
                    let ln_term = ln_c + self.ln_binomial_small(n, j) + (n - j) as f64 * ln_rate + ln_poly
                        - self.ln_fact(power)
                        - decay;
                    let parity = if (n - j) % 2 == 1 { -1.0 } else { 1.0 };
                    let term = ln_term.exp();
                    sum += sign * parity * term;
                    magnitude += term;
                }
            }
        }
        (sum, magnitude)
    }

    fn ln_fact(&self, k: usize) -> f64 {
        self.ln_factorial[k]
    }

    fn ln_binomial_small(&self, n: usize, j: usize) -> f64 {
        if n < self.ln_factorial.len() {
            ln_binomial(n, j, &self.ln_factorial)
        } else {
            let table = ln_factorial_table(n);
            ln_binomial(n, j, &table)
        }
    }
}

/// Value at `t` of the convolution of truncated exponentials with time constants `mus`.
pub fn evaluate_cascade_kernel(t: f64, mus: &[f64]) -> Result<f64> {
    Ok(CascadeKernel::new(mus)?.value(t))
}

/// Gamma density `t^(K-1) e^(-t/mu) / (mu^K (K-1)!)`, the cascade of `K` equal stages.
pub fn evaluate_gamma_kernel(t: f64, mu: f64, stages: usize) -> f64 {
    if t < 0.0 || stages == 0 {
        return 0.0;
    }
    let k = stages as f64;
    if t == 0.0 {
        return if stages == 1 { 1.0 / mu } else { 0.0 };
    }
    let ln_fact: f64 = (1..stages).map(|i| (i as f64).ln()).sum();
    ((k - 1.0) * t.ln() - t / mu - k * mu.ln() - ln_fact).exp()
}

/// Samples of the `n`-th derivative of the composed kernel on `[0, horizon]`.
///
/// The composed kernel of `K` stages is only `K - 2` times continuously
/// differentiable at the origin, so larger derivative orders are rejected.
pub fn kernel_derivative_samples(
    dist: &ScaleDistribution,
    order: usize,
    dt: f64,
    horizon: f64,
) -> Result<SampledKernel> {
    let stages = dist.stages();
    if order >= 1 && order + 2 > stages {
        return Err(Error::Continuity { order, stages });
    }
    if !(dt > 0.0 && dt.is_finite()) || !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!("invalid sampling dt={dt} horizon={horizon}")));
    }
    let kernel = CascadeKernel::new(&dist.mus)?;
    let count = (horizon / dt).floor() as usize + 1;
    let values = (0..count).map(|i| kernel.derivative(i as f64 * dt, order)).collect();
    Ok(SampledKernel { values, dt, t0: 0.0, order })
}

/// Samples of the truncated scale-invariant limit kernel.
pub fn limit_kernel_samples(tau: f64, c: f64, eps: f64, dt: f64, horizon: f64) -> Result<SampledKernel> {
    let dist = scales::truncated_limit_time_constants(tau, c, eps)?;
    kernel_derivative_samples(&dist, 0, dt, horizon)
}

const UNIMODAL_GRID: usize = 2048;
const GOLDEN_TOL: f64 = 1e-6;

/// Position of the maximum of the composed kernel.
///
/// The maximum is bracketed on a grid over `[0, sum(mu)]`; more than one
/// significant local maximum on the grid is reported as an error. A golden
/// section search then narrows the bracket and bisection on the analytic
/// derivative polishes the result.
pub fn tmax_numeric(dist: &ScaleDistribution) -> Result<f64> {
    if dist.stages() < 2 {
        return Err(Error::param("the maximum of a single stage is at the origin"));
    }
    let kernel = CascadeKernel::new(&dist.mus)?;
    let upper = kernel.mean();
    let step = upper / UNIMODAL_GRID as f64;
    let values: Vec<f64> = (0..=UNIMODAL_GRID).map(|i| kernel.value(i as f64 * step)).collect();
    let peak = values.iter().cloned().fold(f64::MIN, f64::max);
    let floor = 1e-9 * peak;
    let maxima: Vec<usize> = (1..=UNIMODAL_GRID)
        .filter(|&i| {
            values[i] > floor && values[i] > values[i - 1] && (i == UNIMODAL_GRID || values[i] >= values[i + 1])
        })
        .collect();
    if maxima.len() != 1 || maxima[0] == UNIMODAL_GRID {
        return Err(Error::NotUnimodal { upper, maxima: maxima.len() });
    }
    let i = maxima[0];
    let (mut a, mut b) = ((i - 1) as f64 * step, (i + 1) as f64 * step);

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (kernel.value(x1), kernel.value(x2));
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = kernel.value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = kernel.value(x1);
        }
    }
    let (mut lo, mut hi) = (a - GOLDEN_TOL, b + GOLDEN_TOL);
    if !(kernel.derivative(lo, 1) > 0.0 && kernel.derivative(hi, 1) < 0.0) {
        return Ok(0.5 * (a + b));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if kernel.derivative(mid, 1) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Temporal mean and kernel maximum, in closed form where one exists.
pub fn delay_report(dist: &ScaleDistribution) -> Result<DelayReport> {
    let (mean, tau) = dist.mean_variance();
    if dist.stages() == 1 {
        return Ok(DelayReport { temporal_mean: mean, tmax: 0.0, method: DelayMethod::ClosedForm });
    }
    if dist.kind == DistributionKind::Uniform {
        let tmax = scales::tmax_uniform(tau, dist.stages());
        return Ok(DelayReport { temporal_mean: mean, tmax, method: DelayMethod::ClosedForm });
    }
    Ok(DelayReport { temporal_mean: mean, tmax: tmax_numeric(dist)?, method: DelayMethod::Numeric })
}

/// Fourier transform `prod 1/(1 + i mu omega)` of the composed kernel.
pub fn fourier_cascade(omega: f64, dist: &ScaleDistribution) -> Complex64 {
    dist.mus.iter().fold(Complex64::new(1.0, 0.0), |acc, mu| acc / Complex64::new(1.0, mu * omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::{explicit_time_constants, logarithmic_time_constants, uniform_time_constants};

    /// Direct numerical convolution of two sampled kernels, used as an oracle.
    fn convolve(a: &[f64], b: &[f64], dt: f64) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for i in 0..a.len() {
            let mut acc = 0.0;
            for j in 0..=i.min(b.len() - 1) {
                let w = if j == 0 || j == i { 0.5 } else { 1.0 };
                acc += w * a[i - j] * b[j];
            }
            out[i] = acc * dt;
        }
        out
    }

    #[test]
    fn single_exponential_and_causality() {
        assert!((evaluate_cascade_kernel(1.0, &[1.0]).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(evaluate_cascade_kernel(-0.5, &[1.0, 2.0]).unwrap(), 0.0);
        assert!(evaluate_cascade_kernel(1.0, &[]).is_err());
    }

    #[test]
    fn repeated_poles_reduce_to_gamma() {
        let v = evaluate_cascade_kernel(2.0, &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - 2.0 * (-2f64).exp()).abs() < 1e-14);
        for k in [1usize, 2, 5, 12, 40] {
            let mus = vec![0.7; k];
            let kern = CascadeKernel::new(&mus).unwrap();
            for t in [0.0, 0.3, 1.0, 4.0, 20.0] {
                let g = evaluate_gamma_kernel(t, 0.7, k);
                assert!((kern.value(t) - g).abs() <= 1e-13 * g.max(1.0), "K={k} t={t}");
            }
        }
        assert_eq!(evaluate_gamma_kernel(0.0, 1.0, 1), 1.0);
    }

    #[test]
    fn distinct_poles_match_numerical_convolution() {
        let dt = 1e-3;
        let n = 8000;
        let e1: Vec<f64> = (0..n).map(|i| evaluate_gamma_kernel(i as f64 * dt, 0.5, 1)).collect();
        let e2: Vec<f64> = (0..n).map(|i| evaluate_gamma_kernel(i as f64 * dt, 1.3, 1)).collect();
        let conv = convolve(&e1, &e2, dt);
        let kern = CascadeKernel::new(&[0.5, 1.3]).unwrap();
        for i in (100..n).step_by(500) {
            assert!((conv[i] - kern.value(i as f64 * dt)).abs() < 1e-5);
        }
    }

    #[test]
    fn mixed_multiplicities_match_convolution_of_gammas() {
        // (mu=0.5 twice) * (mu=1.1 three times), checked against a numerical convolution
        let dt = 5e-4;
        let n = 30000;
        let g1: Vec<f64> = (0..n).map(|i| evaluate_gamma_kernel(i as f64 * dt, 0.5, 2)).collect();
        let g2: Vec<f64> = (0..n).map(|i| evaluate_gamma_kernel(i as f64 * dt, 1.1, 3)).collect();
        let conv = convolve(&g1, &g2, dt);
        let kern = CascadeKernel::new(&[0.5, 1.1, 0.5, 1.1, 1.1]).unwrap();
        for i in (200..n).step_by(1000) {
            assert!((conv[i] - kern.value(i as f64 * dt)).abs() < 1e-6, "i={i}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let kern = CascadeKernel::new(&[0.3, 0.5, 0.5, 0.9, 1.4]).unwrap();
        let h = 1e-5;
        for t in [0.2, 0.9, 2.0, 5.0] {
            let fd1 = (kern.value(t + h) - kern.value(t - h)) / (2.0 * h);
            assert!((kern.derivative(t, 1) - fd1).abs() < 1e-7);
            let fd2 = (kern.derivative(t + h, 1) - kern.derivative(t - h, 1)) / (2.0 * h);
            assert!((kern.derivative(t, 2) - fd2).abs() < 1e-6);
        }
    }

    #[test]
    fn sampled_mass_and_derivative_integrals() {
        let dist = uniform_time_constants(1.0, 7).unwrap();
        let (m, tau) = dist.mean_variance();
        let dt = tau.sqrt() / 256.0;
        let horizon = m + 12.0 * tau.sqrt();
        let k0 = kernel_derivative_samples(&dist, 0, dt, horizon).unwrap();
        assert!((k0.integral() - 1.0).abs() < 1e-6);
        assert!(k0.values.iter().all(|v| *v >= -1e-12));
        let k1 = kernel_derivative_samples(&dist, 1, dt, horizon).unwrap();
        assert!(k1.integral().abs() < 1e-6);
    }

    #[test]
    fn derivative_lobe_patterns() {
        let dist = uniform_time_constants(1.0, 7).unwrap();
        let k1 = kernel_derivative_samples(&dist, 1, 1.0 / 256.0, 20.0).unwrap();
        let lobes = lobe_peaks(&k1.values);
        assert_eq!(lobes.len(), 2);
        assert!(lobes[0] > 0.0 && lobes[1] < 0.0 && lobes[0].abs() > lobes[1].abs());
        let k2 = kernel_derivative_samples(&dist, 2, 1.0 / 256.0, 20.0).unwrap();
        let lobes = lobe_peaks(&k2.values);
        assert_eq!(lobes.len(), 3);
        assert!(lobes[0] > 0.0 && lobes[1] < 0.0 && lobes[2] > 0.0);
        assert!(lobes[0].abs() > lobes[2].abs());
    }

    /// Extreme value of each same-sign run, ignoring numerically negligible runs.
    fn lobe_peaks(v: &[f64]) -> Vec<f64> {
        let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut lobes: Vec<f64> = Vec::new();
        for &x in v.iter().filter(|x| x.abs() > 1e-9 * scale) {
            match lobes.last_mut() {
                Some(last) if last.signum() == x.signum() => {
                    if x.abs() > last.abs() {
                        *last = x;
                    }
                }
                _ => lobes.push(x),
            }
        }
        lobes
    }

    #[test]
    fn continuity_bound() {
        let dist = uniform_time_constants(1.0, 3).unwrap();
        assert!(kernel_derivative_samples(&dist, 1, 0.01, 1.0).is_ok());
        assert!(matches!(
            kernel_derivative_samples(&dist, 2, 0.01, 1.0),
            Err(Error::Continuity { order: 2, stages: 3 })
        ));
    }

    #[test]
    fn tmax_examples() {
        let d = logarithmic_time_constants(1.0, 2f64.sqrt(), 7).unwrap();
        assert!((tmax_numeric(&d).unwrap() - 1.745).abs() < 2e-3);
        let d = uniform_time_constants(1.0, 8).unwrap();
        assert!((tmax_numeric(&d).unwrap() - scales::tmax_uniform(1.0, 8)).abs() < 1e-9);
        let d = logarithmic_time_constants(1.0, 2.0, 12).unwrap();
        assert!((tmax_numeric(&d).unwrap() - 1.106).abs() < 2e-3);
    }

    #[test]
    fn tmax_of_two_distinct_stages() {
        // Closed form for mu1 != mu2: ln(mu2/mu1) mu1 mu2 / (mu2 - mu1)
        let d = explicit_time_constants(&[0.4, 1.5]).unwrap();
        let expect = (1.5f64 / 0.4).ln() * 0.4 * 1.5 / (1.5 - 0.4);
        assert!((tmax_numeric(&d).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn limit_kernel_is_self_similar() {
        let c = 2.0;
        let dt = 1.0 / 256.0;
        let horizon = 20.0;
        let base = limit_kernel_samples(1.0, c, 1e-10, dt, horizon).unwrap();
        assert!((base.integral() - 1.0).abs() < 1e-6);
        let wide = scales::truncated_limit_time_constants(c * c, c, 1e-10).unwrap();
        let wide = CascadeKernel::new(&wide.mus).unwrap();
        let l1: f64 =
            base.values.iter().enumerate().map(|(i, v)| (c * wide.value(c * i as f64 * dt) - v).abs() * dt).sum();
        assert!(l1 < 1e-6);
    }

    #[test]
    fn fourier_dc_and_decay() {
        let d = logarithmic_time_constants(1.0, 2.0, 5).unwrap();
        assert_eq!(fourier_cascade(0.0, &d), Complex64::new(1.0, 0.0));
        let mut prev = 1.0;
        for i in 1..200 {
            let mag = fourier_cascade(i as f64 * 0.1, &d).norm();
            assert!(mag < prev);
            prev = mag;
        }
    }
}
