//! Discrete time-recursive temporal scale-space.
//!
//! Each scale level is produced by a first-order recursive filter
//! `out(t) = out(t-1) + (in(t) - out(t-1)) / (1 + mu)` fed by the previous
//! level, so the whole multi-scale representation at time `t` is held in `K`
//! values per channel.

use crate::error::{Error, Result};
use crate::kernels::SampledKernel;
use crate::scales::ScaleDistribution;

/// Time constant of a recursive stage adding variance `dtau` (in frame units).
///
/// A stage with time constant `mu` has mean `mu` and variance `mu^2 + mu`.
pub fn mu_from_delta_tau(dtau: f64) -> Result<f64> {
    if !(dtau >= 0.0) || !dtau.is_finite() {
        return Err(Error::param(format!("variance increment must be non-negative, got {dtau}")));
    }
    Ok(((1.0 + 4.0 * dtau).sqrt() - 1.0) / 2.0)
}

/// Temporal variance in frames squared for a scale `sigma_t` in seconds at `rate` frames/s.
pub fn seconds_to_frame_variance(sigma_t: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::param(format!("frame rate must be positive, got {rate}")));
    }
    Ok(rate * rate * sigma_t * sigma_t)
}

/// A cascade of first-order recursive filters realizing a scale distribution in frame units.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveCascade {
    pub mus: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub dist: ScaleDistribution,
}

impl RecursiveCascade {
    /// Stages whose variance increments are the gaps between successive levels.
    pub fn from_distribution(dist: &ScaleDistribution) -> Result<Self> {
        let mut prev = 0.0;
        let mut mus = Vec::with_capacity(dist.levels.len());
        for &level in &dist.levels {
            mus.push(mu_from_delta_tau((level - prev).max(0.0))?);
            prev = level;
        }
        Self::from_mus(&mus, dist.clone())
    }

    fn from_mus(mus: &[f64], dist: ScaleDistribution) -> Result<Self> {
        if mus.is_empty() {
            return Err(Error::param("a cascade needs at least one stage"));
        }
        let coeffs = mus.iter().map(|m| 1.0 / (1.0 + m)).collect();
        Ok(RecursiveCascade { mus: mus.to_vec(), coeffs, dist })
    }

    /// Cascade with the given discrete time constants.
    pub fn from_discrete_mus(mus: &[f64]) -> Result<Self> {
        if let Some(bad) = mus.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(Error::param(format!("time constants must be non-negative, got {bad}")));
        }
        let mut acc = 0.0;
        let levels: Vec<f64> = mus
            .iter()
            .map(|m| {
                acc += m * m + m;
                acc
            })
            .collect();
        let dist = ScaleDistribution {
            kind: crate::scales::DistributionKind::Explicit,
            tau_max: acc,
            levels,
            mus: mus.iter().map(|m| (m * m + m).sqrt()).collect(),
        };
        Self::from_mus(mus, dist)
    }

    pub fn stages(&self) -> usize {
        self.mus.len()
    }

    /// Temporal mean of the equivalent discrete kernel, in frames.
    pub fn mean(&self) -> f64 {
        self.mus.iter().sum()
    }

    /// Temporal variance of the equivalent discrete kernel, in frames squared.
    pub fn variance(&self) -> f64 {
        self.mus.iter().map(|m| m * m + m).sum()
    }

    /// Frames to wait before temporal derivatives are emitted.
    pub fn warmup_frames(&self) -> usize {
        (self.mean().ceil() as usize).max(2)
    }

    /// The stages from `first` onwards, as a cascade of their own.
    pub fn suffix(&self, first: usize) -> Result<Self> {
        if first >= self.stages() {
            return Err(Error::param(format!("cascade has only {} stages", self.stages())));
        }
        Self::from_discrete_mus(&self.mus[first..])
    }
}

/// How the stage values are set before the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Every stage starts at the first input value, so a steady input gives a steady output.
    PrimeWithFirst,
    /// Every stage starts at zero, as needed for impulse responses.
    Zero,
}

/// Last output of every stage for a number of independent channels.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeState {
    /// Stage-major: stage `k` occupies `values[k * channels..(k + 1) * channels]`.
    values: Vec<f64>,
    channels: usize,
    stages: usize,
    init: InitMode,
    pub frame_index: u64,
}

impl CascadeState {
    pub fn new(cascade: &RecursiveCascade, channels: usize, init: InitMode) -> Self {
        CascadeState {
            values: vec![0.0; cascade.stages() * channels],
            channels,
            stages: cascade.stages(),
            init,
            frame_index: 0,
        }
    }

    /// Rebuilds a state from raw stage-major values, e.g. after deserialization.
    pub fn from_parts(
        values: Vec<f64>,
        channels: usize,
        stages: usize,
        init: InitMode,
        frame_index: u64,
    ) -> Result<Self> {
        if values.len() != channels * stages {
            return Err(Error::State(format!(
                "{} values do not fill {stages} stages of {channels} channels",
                values.len()
            )));
        }
        Ok(CascadeState { values, channels, stages, init, frame_index })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn init_mode(&self) -> InitMode {
        self.init
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Current output of stage `k` (0-based) for all channels.
    pub fn stage(&self, k: usize) -> &[f64] {
        &self.values[k * self.channels..(k + 1) * self.channels]
    }

    fn check(&self, cascade: &RecursiveCascade, len: usize) -> Result<()> {
        if cascade.stages() != self.stages {
            return Err(Error::State(format!("state holds {} stages, cascade has {}", self.stages, cascade.stages())));
        }
        if len != self.channels {
            return Err(Error::State(format!("state holds {} channels, input has {len}", self.channels)));
        }
        Ok(())
    }

    /// Feeds one frame through all stages and returns the output of the last one.
    pub fn step_slice(&mut self, cascade: &RecursiveCascade, input: &[f64]) -> Result<&[f64]> {
        self.check(cascade, input.len())?;
        let n = self.channels;
        if self.frame_index == 0 && self.init == InitMode::PrimeWithFirst {
            for k in 0..self.stages {
                self.values[k * n..(k + 1) * n].copy_from_slice(input);
            }
        }
        for (k, &a) in cascade.coeffs.iter().enumerate() {
            let (done, rest) = self.values.split_at_mut(k * n);
            let src = if k == 0 { input } else { &done[(k - 1) * n..] };
            for (out, x) in rest[..n].iter_mut().zip(src) {
                *out += a * (x - *out);
            }
        }
        self.frame_index += 1;
        Ok(self.stage(self.stages - 1))
    }

    /// Single-channel update returning the outputs of all stages.
    pub fn step(&mut self, cascade: &RecursiveCascade, sample: f64) -> Result<Vec<f64>> {
        self.step_slice(cascade, &[sample])?;
        Ok((0..self.stages).map(|k| self.stage(k)[0]).collect())
    }
}

/// Equivalent discrete kernel of a cascade, cut once its mass reaches `1 - eps`.
pub fn impulse_response(cascade: &RecursiveCascade, eps: f64) -> Result<SampledKernel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    let mut state = CascadeState::new(cascade, 1, InitMode::Zero);
    let limit = 64 + (cascade.mean() + 64.0 * cascade.variance().sqrt()).ceil() as usize * 4;
    let mut values = Vec::new();
    let mut mass = 0.0;
    let mut input = 1.0;
    while mass < 1.0 - eps && values.len() < limit {
        let v = state.step_slice(cascade, &[input])?[0];
        input = 0.0;
        mass += v;
        values.push(v);
    }
    Ok(SampledKernel { values, dt: 1.0, t0: 0.0, order: 0 })
}

/// Temporal difference operators over the most recent frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalOp {
    /// Backward difference `(-1, +1)`.
    First,
    /// Second difference `(1, -2, 1)`.
    Second,
}

/// The last three frames of one scale channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalHistory {
    slots: [Vec<f64>; 3],
    newest: usize,
    filled: usize,
}

impl TemporalHistory {
    pub fn new(channels: usize) -> Self {
        TemporalHistory { slots: [vec![0.0; channels], vec![0.0; channels], vec![0.0; channels]], newest: 2, filled: 0 }
    }

    pub fn channels(&self) -> usize {
        self.slots[0].len()
    }

    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn push(&mut self, frame: &[f64]) {
        self.newest = (self.newest + 1) % 3;
        self.slots[self.newest].copy_from_slice(frame);
        self.filled = (self.filled + 1).min(3);
    }

    /// Frame `age` steps back (0 = newest).
    pub fn frame(&self, age: usize) -> &[f64] {
        &self.slots[(self.newest + 3 - age) % 3]
    }

    /// Frames oldest first, with the fill count, for serialization.
    pub fn to_parts(&self) -> (Vec<&[f64]>, usize) {
        ((0..3).rev().map(|a| self.frame(a)).collect(), self.filled)
    }

    /// Inverse of [`TemporalHistory::to_parts`].
    pub fn from_parts(oldest_first: [Vec<f64>; 3], filled: usize) -> Self {
        TemporalHistory { slots: oldest_first, newest: 2, filled: filled.min(3) }
    }

    /// Applies `op` to the buffered frames, or `None` while the history is too short.
    pub fn difference(&self, op: TemporalOp) -> Option<Vec<f64>> {
        let (now, prev) = (self.frame(0), self.frame(1));
        match op {
            TemporalOp::First if self.filled >= 2 => Some(now.iter().zip(prev).map(|(a, b)| a - b).collect()),
            TemporalOp::Second if self.filled >= 3 => {
                Some(now.iter().zip(prev).zip(self.frame(2)).map(|((a, b), c)| (a + c) - 2.0 * b).collect())
            }
            _ => None,
        }
    }
}

/// Difference over the most recent values of a scalar sequence (newest last).
pub fn temporal_difference(recent: &[f64], op: TemporalOp) -> Option<f64> {
    let n = recent.len();
    match op {
        TemporalOp::First if n >= 2 => Some(recent[n - 1] - recent[n - 2]),
        TemporalOp::Second if n >= 3 => Some((recent[n - 1] + recent[n - 3]) - 2.0 * recent[n - 2]),
        _ => None,
    }
}

/// Number of sign changes in a sequence, zeros skipped.
pub fn sign_changes(values: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}
