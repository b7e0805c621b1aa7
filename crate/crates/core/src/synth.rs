//! Synthetic test sequences with known ground truth.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Stationary Gaussian blob.
    Blob,
    /// Spatially constant intensity varying sinusoidally in time.
    Flicker,
    /// Gaussian blob moving with constant velocity.
    Translate,
    /// Central square switched on at a given frame.
    Step,
}

impl SynthKind {
    pub fn name(&self) -> &'static str {
        match self {
            SynthKind::Blob => "blob",
            SynthKind::Flicker => "flicker",
            SynthKind::Translate => "translate",
            SynthKind::Step => "step",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blob" => Ok(SynthKind::Blob),
            "flicker" => Ok(SynthKind::Flicker),
            "translate" => Ok(SynthKind::Translate),
            "step" => Ok(SynthKind::Step),
            other => Err(Error::param(format!("unknown pattern {other}"))),
        }
    }
}

/// Geometry and timing of a synthetic sequence. Units are pixels and frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub background: f64,
    pub amplitude: f64,
    /// Standard deviation of the blob, or half the side of the step square.
    pub size: f64,
    /// Blob center at frame 0; defaults to the image center when `None`.
    pub start: Option<(f64, f64)>,
    pub velocity: (f64, f64),
    /// Flicker period in frames.
    pub period: f64,
    /// First frame at which the step is on.
    pub onset: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            width: 64,
            height: 64,
            frames: 40,
            background: 20.0,
            amplitude: 200.0,
            size: 3.0,
            start: None,
            velocity: (0.5, 0.0),
            period: 16.0,
            onset: 10,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::param("synthetic frames must be at least 3x3"));
        }
        if self.frames == 0 {
            return Err(Error::param("at least one frame is needed"));
        }
        if !(self.size > 0.0) {
            return Err(Error::param(format!("pattern size must be positive, got {}", self.size)));
        }
        if !(self.period > 0.0) {
            return Err(Error::param(format!("flicker period must be positive, got {}", self.period)));
        }
        Ok(())
    }

    fn center0(&self) -> (f64, f64) {
        self.start.unwrap_or(((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0))
    }
}

/// Center of the pattern at frame `t`.
pub fn pattern_center(kind: SynthKind, params: &SynthParams, t: f64) -> (f64, f64) {
    let (x0, y0) = params.center0();
    match kind {
        SynthKind::Translate => (x0 + params.velocity.0 * t, y0 + params.velocity.1 * t),
        _ => (x0, y0),
    }
}

/// Frame `t` of the sequence.
pub fn frame(kind: SynthKind, params: &SynthParams, t: usize) -> Image {
    let (cx, cy) = pattern_center(kind, params, t as f64);
    let inv = 1.0 / (2.0 * params.size * params.size);
    let blob = |x: usize, y: usize| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        (-(dx * dx + dy * dy) * inv).exp()
    };
    let (bg, amp) = (params.background, params.amplitude);
    match kind {
        SynthKind::Blob | SynthKind::Translate => {
            Image::from_fn(params.width, params.height, |x, y| bg + amp * blob(x, y))
        }
        SynthKind::Flicker => {
            let gain = 0.5 * (1.0 + (2.0 * std::f64::consts::PI * t as f64 / params.period).sin());
            Image::filled(params.width, params.height, bg + amp * gain)
        }
        SynthKind::Step => {
            let on = t >= params.onset;
            Image::from_fn(params.width, params.height, |x, y| {
                let inside = (x as f64 - cx).abs() <= params.size && (y as f64 - cy).abs() <= params.size;
                if on && inside {
                    bg + amp
                } else {
                    bg
                }
            })
        }
    }
}

/// Ground truth as `key=value` lines.
pub fn ground_truth(kind: SynthKind, params: &SynthParams) -> Vec<String> {
    let mut lines = vec![
        format!("pattern={kind}"),
        format!("width={}", params.width),
        format!("height={}", params.height),
        format!("frames={}", params.frames),
    ];
    match kind {
        SynthKind::Step => {
            let (cx, cy) = params.center0();
            lines.push(format!("onset={}", params.onset));
            lines.push(format!("center={cx},{cy}"));
        }
        SynthKind::Flicker => {
            lines.push(format!("period={}", params.period));
        }
        SynthKind::Blob | SynthKind::Translate => {
            lines.push(format!("velocity={},{}", params.velocity.0, params.velocity.1));
            for t in 0..params.frames {
                let (x, y) = pattern_center(kind, params, t as f64);
                lines.push(format!("center.{t}={x},{y}"));
            }
        }
    }
    lines
}

/// All frames of the sequence.
pub fn generate(kind: SynthKind, params: &SynthParams) -> Result<Vec<Image>> {
    params.validate()?;
    Ok((0..params.frames).map(|t| frame(kind, params, t)).collect())
}
