//! Single-pass streaming computation of spatio-temporal features.
//!
//! Each frame is smoothed spatially once per spatial scale and then fed into
//! one recursive temporal cascade per (spatial, temporal) scale pair. A channel
//! keeps the `K` stage values and the last three outputs of its finest
//! requested temporal level, so memory does not depend on the stream length.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{self, required_partials, FeatureKind, FeatureParams, JetNormalization, JetSlice};
use crate::image::Image;
use crate::normalization::{NormMode, NormalizationSpec};
use crate::recursive::{
    seconds_to_frame_variance, CascadeState, InitMode, RecursiveCascade, TemporalHistory, TemporalOp,
};
use crate::scales::{self, ScaleDistribution};
use crate::spatial::{self, DiscreteGaussian, SmoothingScheme};

/// Temporal scale distribution requested for the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalDistribution {
    Uniform,
    Logarithmic { c: f64 },
    Limit { c: f64, eps: f64 },
}

/// Everything the pipeline needs to know before the first frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub fps: f64,
    pub sigma_t_seconds: Vec<f64>,
    /// Spatial scales, in degrees when `pixels_per_degree` is not 1.
    pub sigma_x: Vec<f64>,
    pub pixels_per_degree: f64,
    pub distribution: TemporalDistribution,
    pub stages: usize,
    pub normalization: NormalizationSpec,
    pub features: Vec<FeatureKind>,
    pub params: FeatureParams,
    pub log_intensity: bool,
    pub smoothing: SmoothingScheme,
    pub spatial_eps: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fps: 25.0,
            sigma_t_seconds: vec![0.2],
            sigma_x: vec![2.0],
            pixels_per_degree: 1.0,
            distribution: TemporalDistribution::Logarithmic { c: 2f64.sqrt() },
            stages: 7,
            normalization: NormalizationSpec::default(),
            features: vec![FeatureKind::Q2],
            params: FeatureParams::default(),
            log_intensity: false,
            smoothing: SmoothingScheme::Separable,
            spatial_eps: 1e-8,
        }
    }
}

impl PipelineConfig {
    /// Checks every parameter against the preconditions of the stages it feeds.
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::param(format!("frame rate must be positive, got {}", self.fps)));
        }
        if self.sigma_t_seconds.is_empty() || self.sigma_x.is_empty() {
            return Err(Error::param("at least one temporal and one spatial scale are needed"));
        }
        if let Some(bad) = self.sigma_t_seconds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::param(format!("temporal scales must be positive, got {bad}")));
        }
        if let Some(bad) = self.sigma_x.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::param(format!("spatial scales must be non-negative, got {bad}")));
        }
        if self.features.is_empty() {
            return Err(Error::param("no features requested"));
        }
        if !(self.params.kappa > 0.0) {
            return Err(Error::param(format!("kappa must be positive, got {}", self.params.kappa)));
        }
        if !(self.spatial_eps > 0.0 && self.spatial_eps < 1.0) {
            return Err(Error::param(format!("spatial eps must lie in (0, 1), got {}", self.spatial_eps)));
        }
        for &sigma in &self.sigma_t_seconds {
            self.cascade_for(sigma)?;
        }
        for &sigma in &self.sigma_x {
            spatial::sigma_to_pixel_variance(sigma, self.pixels_per_degree)?;
        }
        Ok(())
    }

    /// Scale distribution in frame units for a temporal scale in seconds.
    pub fn distribution_for(&self, sigma_t: f64) -> Result<ScaleDistribution> {
        let tau = seconds_to_frame_variance(sigma_t, self.fps)?;
        match self.distribution {
            TemporalDistribution::Uniform => scales::uniform_time_constants(tau, self.stages),
            TemporalDistribution::Logarithmic { c } => scales::logarithmic_time_constants(tau, c, self.stages),
            TemporalDistribution::Limit { c, eps } => scales::truncated_limit_time_constants(tau, c, eps),
        }
    }

    pub fn cascade_for(&self, sigma_t: f64) -> Result<RecursiveCascade> {
        RecursiveCascade::from_distribution(&self.distribution_for(sigma_t)?)
    }

    /// Flat description of the configuration, also used to check saved state.
    pub fn describe(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let dist = match self.distribution {
            TemporalDistribution::Uniform => "uniform".to_string(),
            TemporalDistribution::Logarithmic { c } => format!("log c={c}"),
            TemporalDistribution::Limit { c, eps } => format!("limit c={c} eps={eps}"),
        };
        let features: Vec<&str> = self.features.iter().map(|f| f.name()).collect();
        vec![
            ("fps".into(), format!("{}", self.fps)),
            ("sigma_t_seconds".into(), list(&self.sigma_t_seconds)),
            ("sigma_x".into(), list(&self.sigma_x)),
            ("pixels_per_degree".into(), format!("{}", self.pixels_per_degree)),
            ("distribution".into(), dist),
            ("stages".into(), format!("{}", self.stages)),
            (
                "normalization".into(),
                match self.normalization.mode {
                    NormMode::Variance => "var".into(),
                    NormMode::Lp => "lp".into(),
                },
            ),
            ("gamma_s".into(), format!("{}", self.normalization.gamma_s)),
            ("gamma_t".into(), format!("{}", self.normalization.gamma_tau)),
            ("features".into(), features.join(",")),
            ("C".into(), format!("{}", self.params.c.value())),
            ("kappa".into(), format!("{}", self.params.kappa)),
            ("velocity".into(), format!("{},{}", self.params.velocity.0, self.params.velocity.1)),
            ("log_intensity".into(), format!("{}", self.log_intensity)),
            (
                "smoothing".into(),
                match self.smoothing {
                    SmoothingScheme::Separable => "separable".into(),
                    SmoothingScheme::GammaThird => "gamma-third".into(),
                },
            ),
            ("spatial_eps".into(), format!("{}", self.spatial_eps)),
        ]
    }
}

/// Tracks how many frame-sized buffers are alive, and the peak.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SliceCounter {
    current: usize,
    high_water: usize,
}

impl SliceCounter {
    pub fn acquire(&mut self, n: usize) {
        self.current += n;
        self.high_water = self.high_water.max(self.current);
    }

    pub fn release(&mut self, n: usize) {
        self.current -= n;
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }
}

#[derive(Debug, Clone)]
struct Channel {
    spatial_index: usize,
    temporal_index: usize,
    s: f64,
    cascade: RecursiveCascade,
    state: CascadeState,
    history: TemporalHistory,
    normalization: JetNormalization,
    warmup: usize,
}

/// One feature map produced for one frame and one scale pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub feature: FeatureKind,
    pub spatial_index: usize,
    pub temporal_index: usize,
    pub frame_index: usize,
    pub image: Image,
}

/// Streaming feature extractor.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    dims: Option<(usize, usize)>,
    spatial_kernels: Vec<(f64, Option<DiscreteGaussian>)>,
    channels: Vec<Channel>,
    frames_seen: usize,
    data_scale: f64,
    memory: SliceCounter,
}

const STATE_MAGIC: &[u8; 8] = b"TCSTATE1";

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let mut spatial_kernels = Vec::new();
        for &sigma in &config.sigma_x {
            let s = spatial::sigma_to_pixel_variance(sigma, config.pixels_per_degree)?;
            let kernel = match config.smoothing {
                SmoothingScheme::Separable => Some(DiscreteGaussian::new(s, config.spatial_eps)?),
                SmoothingScheme::GammaThird => None,
            };
            spatial_kernels.push((s, kernel));
        }
        let mut channels = Vec::new();
        for (si, &(s, _)) in spatial_kernels.iter().enumerate() {
            for (ti, &sigma_t) in config.sigma_t_seconds.iter().enumerate() {
                let cascade = config.cascade_for(sigma_t)?;
                let temporal = [
                    1.0,
                    config.normalization.temporal_factor(&cascade, 1)?,
                    config.normalization.temporal_factor(&cascade, 2)?,
                ];
                let normalization =
                    JetNormalization { s, tau: cascade.variance(), gamma_s: config.normalization.gamma_s, temporal };
                channels.push(Channel {
                    spatial_index: si,
                    temporal_index: ti,
                    s,
                    warmup: cascade.warmup_frames(),
                    state: CascadeState::new(&cascade, 0, InitMode::PrimeWithFirst),
                    history: TemporalHistory::new(0),
                    cascade,
                    normalization,
                });
            }
        }
        Ok(Pipeline {
            config,
            dims: None,
            spatial_kernels,
            channels,
            frames_seen: 0,
            data_scale: 1.0,
            memory: SliceCounter::default(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    pub fn memory(&self) -> SliceCounter {
        self.memory
    }

    /// Frames suppressed at the start of each channel, in channel order.
    pub fn warmups(&self) -> Vec<usize> {
        self.channels.iter().map(|c| c.warmup).collect()
    }

    fn allocate(&mut self, width: usize, height: usize) {
        let n = width * height;
        for ch in &mut self.channels {
            ch.state = CascadeState::new(&ch.cascade, n, InitMode::PrimeWithFirst);
            ch.history = TemporalHistory::new(n);
            self.memory.acquire(ch.cascade.stages() + 3);
        }
        self.dims = Some((width, height));
    }

    /// Processes the next frame and returns the feature maps due for it.
    pub fn push_frame(&mut self, frame: &Image) -> Result<Vec<FeatureFrame>> {
        let index = self.frames_seen;
        match self.dims {
            None => {
                if frame.width() < 3 || frame.height() < 3 {
                    return Err(Error::Frame { index, message: "frames must be at least 3x3".into() });
                }
                self.allocate(frame.width(), frame.height());
                let scale = frame.max_abs();
                self.data_scale = if scale > 0.0 { scale } else { 1.0 };
            }
            Some(d) if d != frame.dims() => {
                return Err(Error::Frame {
                    index,
                    message: format!("dimensions {:?} differ from the first frame {:?}", frame.dims(), d),
                });
            }
            _ => {}
        }

        let velocity = self.config.params.velocity;
        let t = index as f64;
        self.memory.acquire(1);
        let mut input = if self.config.log_intensity { frame.map(|v| (1.0 + v).ln()) } else { frame.clone() };
        input = features::warp_frame(&input, velocity, t);

        let mut smoothed = Vec::with_capacity(self.spatial_kernels.len());
        for (s, kernel) in &self.spatial_kernels {
            self.memory.acquire(1);
            smoothed.push(match kernel {
                Some(k) => spatial::smooth_with(&input, k),
                None => spatial::smooth_gamma_third(&input, *s, self.config.spatial_eps)?,
            });
        }

        let required = required_partials(&self.config.features);
        let max_t = required.iter().map(|p| p.t).max().unwrap_or(0);
        let mut params = self.config.params;
        params.data_scale = self.data_scale;
        let mut out = Vec::new();
        for ch in &mut self.channels {
            let level = ch
                .state
                .step_slice(&ch.cascade, smoothed[ch.spatial_index].pixels())
                .map_err(|e| Error::Frame { index, message: e.to_string() })?;
            ch.history.push(level);
            if index < ch.warmup {
                continue;
            }
            let (w, h) = frame.dims();
            let base = Image::new(w, h, ch.history.frame(0).to_vec())?;
            let first = if max_t >= 1 { ch.history.difference(TemporalOp::First) } else { None };
            let second = if max_t >= 2 { ch.history.difference(TemporalOp::Second) } else { None };
            let first = first.map(|v| Image::new(w, h, v)).transpose()?;
            let second = second.map(|v| Image::new(w, h, v)).transpose()?;
            let temporal_slices = 1 + first.is_some() as usize + second.is_some() as usize;
            self.memory.acquire(temporal_slices + required.len());
            let jet =
                JetSlice::from_temporal([Some(&base), first.as_ref(), second.as_ref()], &required, ch.normalization)?;
            for &feature in &self.config.features {
                let img = features::evaluate(feature, &jet, &params)?;
                out.push(FeatureFrame {
                    feature,
                    spatial_index: ch.spatial_index,
                    temporal_index: ch.temporal_index,
                    frame_index: index,
                    image: features::unwarp_frame(&img, velocity, t),
                });
            }
            self.memory.release(temporal_slices + required.len());
        }
        self.memory.release(1 + self.spatial_kernels.len());
        self.frames_seen += 1;
        Ok(out)
    }

    /// Key/value manifest describing the configuration and the per-channel scales.
    pub fn manifest(&self) -> Vec<(String, String)> {
        let mut m = self.config.describe();
        m.push(("frames_processed".into(), self.frames_seen.to_string()));
        if let Some((w, h)) = self.dims {
            m.push(("width".into(), w.to_string()));
            m.push(("height".into(), h.to_string()));
        }
        for ch in &self.channels {
            let key = format!("channel.x{}.t{}", ch.spatial_index, ch.temporal_index);
            m.push((format!("{key}.s"), format!("{}", ch.s)));
            m.push((format!("{key}.tau_frames"), format!("{}", ch.cascade.variance())));
            m.push((format!("{key}.stages"), ch.cascade.stages().to_string()));
            m.push((format!("{key}.temporal_mean_frames"), format!("{}", ch.cascade.mean())));
            m.push((format!("{key}.warmup"), ch.warmup.to_string()));
            m.push((format!("{key}.alpha1"), format!("{}", ch.normalization.temporal[1])));
            m.push((format!("{key}.alpha2"), format!("{}", ch.normalization.temporal[2])));
        }
        m.push(("memory_high_water_slices".into(), self.memory.high_water().to_string()));
        m
    }

    fn fingerprint(&self) -> String {
        self.config.describe().iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }

    /// Writes the recursive state so a later run can continue the stream bit-exactly.
    pub fn save_state(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io);
        let fp = self.fingerprint();
        put(STATE_MAGIC)?;
        put(&(fp.len() as u64).to_le_bytes())?;
        put(fp.as_bytes())?;
        let (width, height) = self.dims.unwrap_or((0, 0));
        for v in [width as u64, height as u64, self.frames_seen as u64] {
            put(&v.to_le_bytes())?;
        }
        put(&self.data_scale.to_le_bytes())?;
        for ch in &self.channels {
            put(&ch.state.frame_index.to_le_bytes())?;
            for v in ch.state.values() {
                put(&v.to_le_bytes())?;
            }
            let (slots, filled) = ch.history.to_parts();
            put(&(filled as u64).to_le_bytes())?;
            for slot in slots {
                for v in slot {
                    put(&v.to_le_bytes())?;
                }
            }
        }
        w.flush().map_err(io)
    }

    /// Rebuilds a pipeline from `config` and a state file written by [`Pipeline::save_state`].
    pub fn load_state(config: PipelineConfig, path: &Path) -> Result<Self> {
        let mut p = Pipeline::new(config)?;
        let io = |e| Error::io(path, e);
        let mut r = BufReader::new(File::open(path).map_err(io)?);
        let bad = |m: &str| Error::Format { path: path.to_path_buf(), message: m.to_string() };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != STATE_MAGIC {
            return Err(bad("not a state file"));
        }
        let read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(io)?;
            Ok(u64::from_le_bytes(b))
        };
        let fp_len = read_u64(&mut r)? as usize;
        let mut fp = vec![0u8; fp_len];
        r.read_exact(&mut fp).map_err(io)?;
        if fp != p.fingerprint().as_bytes() {
            return Err(Error::param("saved state was produced with a different configuration"));
        }
        let width = read_u64(&mut r)? as usize;
        let height = read_u64(&mut r)? as usize;
        let frames_seen = read_u64(&mut r)? as usize;
        let data_scale = f64::from_bits(read_u64(&mut r)?);
        if width == 0 || height == 0 {
            return Ok(p);
        }
        p.allocate(width, height);
        p.frames_seen = frames_seen;
        p.data_scale = data_scale;
        let n = width * height;
        for ch in &mut p.channels {
            let frame_index = read_u64(&mut r)?;
            let mut values = vec![0.0; n * ch.cascade.stages()];
            for v in values.iter_mut() {
                *v = f64::from_bits(read_u64(&mut r)?);
            }
            ch.state = CascadeState::from_parts(values, n, ch.cascade.stages(), InitMode::PrimeWithFirst, frame_index)?;
            let filled = read_u64(&mut r)? as usize;
            let mut slot = || -> Result<Vec<f64>> { (0..n).map(|_| Ok(f64::from_bits(read_u64(&mut r)?))).collect() };
            let slots = [slot()?, slot()?, slot()?];
            ch.history = TemporalHistory::from_parts(slots, filled);
        }
        Ok(p)
    }
}

/// Writes a manifest as `key=value` lines.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let text: String = entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            fps: 1.0,
            sigma_t_seconds: vec![2.0],
            sigma_x: vec![1.0],
            stages: 4,
            features: vec![FeatureKind::Q1, FeatureKind::Q2, FeatureKind::Q3, FeatureKind::DetHessian],
            ..Default::default()
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = small_config();
        c.fps = 0.0;
        assert!(matches!(Pipeline::new(c), Err(Error::Parameter(_))));
        let mut c = small_config();
        c.distribution = TemporalDistribution::Logarithmic { c: 0.9 };
        assert!(Pipeline::new(c).is_err());
        let mut c = small_config();
        c.features.clear();
        assert!(Pipeline::new(c).is_err());
    }

    #[test]
    fn constant_frames_give_zero_features() {
        let mut p = Pipeline::new(small_config()).unwrap();
        let frame = Image::filled(10, 8, 77.0);
        let mut emitted = 0;
        for _ in 0..12 {
            for f in p.push_frame(&frame).unwrap() {
                assert!(f.image.pixels().iter().all(|v| *v == 0.0), "{}", f.feature);
                emitted += 1;
            }
        }
        assert_eq!(emitted, 4 * (12 - p.warmups()[0]));
    }

    #[test]
    fn dimension_change_aborts_with_index() {
        let mut p = Pipeline::new(small_config()).unwrap();
        p.push_frame(&Image::zeros(6, 6)).unwrap();
        match p.push_frame(&Image::zeros(7, 6)) {
            Err(Error::Frame { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slice_counter() {
        let mut c = SliceCounter::default();
        c.acquire(3);
        c.release(2);
        c.acquire(1);
        assert_eq!((c.current(), c.high_water()), (2, 3));
    }
}
