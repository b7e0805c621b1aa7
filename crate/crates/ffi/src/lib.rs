//! C interface to the timecausal library.
//!
//! Every function returns a [`TcStatus`]; results are written through out
//! pointers. On failure a message for the calling thread is available from
//! [`tc_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use timecausal::features::FeatureKind;
use timecausal::normalization::gaussian_derivative_norm;
use timecausal::pipeline::{FeatureFrame, Pipeline, PipelineConfig, TemporalDistribution};
use timecausal::recursive::{CascadeState, InitMode, RecursiveCascade};
use timecausal::scales::{self, ScaleDistribution};
use timecausal::spatial::{smooth_with, DiscreteGaussian};
use timecausal::{Error, Image};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    /// A required pointer was null or a buffer was too small.
    InvalidArgument = 1,
    /// A parameter was outside its domain.
    Parameter = 2,
    /// Reading or writing a file failed, or a frame was malformed.
    Io = 3,
    /// A numerical or state error.
    Numeric = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> TcStatus {
    match err.exit_code() {
        2 => TcStatus::Parameter,
        3 => TcStatus::Io,
        _ => TcStatus::Numeric,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), TcStatus>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            TcStatus::Panic
        }
    }
}

fn fail(err: Error) -> TcStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn invalid(message: &str) -> TcStatus {
    set_error(message.to_string());
    TcStatus::InvalidArgument
}

fn lift<T>(r: timecausal::Result<T>) -> Result<T, TcStatus> {
    r.map_err(fail)
}

unsafe fn write_out<T>(ptr: *mut T, value: T) -> Result<(), TcStatus> {
    if ptr.is_null() {
        return Err(invalid("null output pointer"));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], TcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(invalid("null input buffer"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize) -> Result<&'a mut [T], TcStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(invalid("null output buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn string<'a>(ptr: *const c_char) -> Result<&'a str, TcStatus> {
    if ptr.is_null() {
        return Err(invalid("null string"));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| invalid("string is not valid UTF-8"))
}

/// Uniform distribution when `c <= 0`, logarithmic otherwise.
fn distribution(tau: f64, c: f64, stages: usize) -> timecausal::Result<ScaleDistribution> {
    if c <= 0.0 {
        scales::uniform_time_constants(tau, stages)
    } else {
        scales::logarithmic_time_constants(tau, c, stages)
    }
}

/// Copies the last error message of this thread into `buf` (NUL terminated, truncated to `len`)
/// and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Temporal mean of a cascade of `stages` stages with total variance `tau`.
/// `c <= 0` selects the uniform distribution.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_temporal_mean(tau: f64, c: f64, stages: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        let d = lift(distribution(tau, c, stages))?;
        write_out(out, d.mus.iter().sum())
    })
}

/// Position of the maximum of the continuous cascade kernel.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_temporal_tmax(tau: f64, c: f64, stages: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        let d = lift(distribution(tau, c, stages))?;
        write_out(out, lift(timecausal::kernels::tmax_numeric(&d))?)
    })
}

/// `L_p` norm of the `n`-th derivative of the unit Gaussian, with `p` paired to `gamma`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_gaussian_derivative_norm(n: usize, gamma: f64, out: *mut f64) -> TcStatus {
    guard(|| write_out(out, lift(gaussian_derivative_norm(n, gamma))?))
}

/// Recursive temporal smoothing of a fixed number of channels.
pub struct TcTemporalFilter {
    cascade: RecursiveCascade,
    state: CascadeState,
}

/// Creates a filter with total variance `tau` in frames squared.
/// `c <= 0` selects the uniform distribution.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_temporal_filter_new(
    tau: f64,
    c: f64,
    stages: usize,
    channels: usize,
    out: *mut *mut TcTemporalFilter,
) -> TcStatus {
    guard(|| {
        if channels == 0 {
            return Err(fail(Error::Parameter("at least one channel is needed".into())));
        }
        let cascade = lift(RecursiveCascade::from_distribution(&lift(distribution(tau, c, stages))?))?;
        let state = CascadeState::new(&cascade, channels, InitMode::PrimeWithFirst);
        write_out(out, Box::into_raw(Box::new(TcTemporalFilter { cascade, state })))
    })
}

/// Feeds one sample per channel and writes the smoothed output of the last stage.
///
/// # Safety
/// `filter` must come from [`tc_temporal_filter_new`]; `input` and `output` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tc_temporal_filter_step(
    filter: *mut TcTemporalFilter,
    input: *const f64,
    output: *mut f64,
    len: usize,
) -> TcStatus {
    guard(|| {
        let f = filter.as_mut().ok_or_else(|| invalid("null filter"))?;
        let input = slice(input, len)?;
        let output = slice_mut(output, len)?;
        let result = lift(f.state.step_slice(&f.cascade, input))?;
        output.copy_from_slice(result);
        Ok(())
    })
}

/// # Safety
/// `filter` must be null or come from [`tc_temporal_filter_new`], and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_temporal_filter_free(filter: *mut TcTemporalFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Discrete Gaussian kernel of variance `s`.
pub struct TcDiscreteGaussian {
    kernel: DiscreteGaussian,
}

/// Creates a kernel truncated where the neglected mass falls below `eps`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_discrete_gaussian_new(s: f64, eps: f64, out: *mut *mut TcDiscreteGaussian) -> TcStatus {
    guard(|| {
        let kernel = lift(DiscreteGaussian::new(s, eps))?;
        write_out(out, Box::into_raw(Box::new(TcDiscreteGaussian { kernel })))
    })
}

/// Number of taps, `2 * half_width + 1`.
///
/// # Safety
/// `kernel` must come from [`tc_discrete_gaussian_new`]; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_discrete_gaussian_len(kernel: *const TcDiscreteGaussian, out: *mut usize) -> TcStatus {
    guard(|| {
        let k = kernel.as_ref().ok_or_else(|| invalid("null kernel"))?;
        write_out(out, 2 * k.kernel.half_width() + 1)
    })
}

/// Copies the taps, centre in the middle.
///
/// # Safety
/// `kernel` must come from [`tc_discrete_gaussian_new`]; `taps` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tc_discrete_gaussian_taps(
    kernel: *const TcDiscreteGaussian,
    taps: *mut f64,
    len: usize,
) -> TcStatus {
    guard(|| {
        let k = kernel.as_ref().ok_or_else(|| invalid("null kernel"))?;
        let full = k.kernel.full();
        if len < full.len() {
            return Err(invalid("tap buffer too small"));
        }
        slice_mut(taps, full.len())?.copy_from_slice(&full);
        Ok(())
    })
}

/// Separable smoothing of a row-major `width x height` image with mirrored borders.
///
/// # Safety
/// `kernel` must come from [`tc_discrete_gaussian_new`]; `input` and `output` must hold `width * height` values.
#[no_mangle]
pub unsafe extern "C" fn tc_discrete_gaussian_smooth(
    kernel: *const TcDiscreteGaussian,
    width: usize,
    height: usize,
    input: *const f64,
    output: *mut f64,
) -> TcStatus {
    guard(|| {
        let k = kernel.as_ref().ok_or_else(|| invalid("null kernel"))?;
        let n = width.checked_mul(height).ok_or_else(|| invalid("image too large"))?;
        let img = lift(Image::new(width, height, slice(input, n)?.to_vec()))?;
        slice_mut(output, n)?.copy_from_slice(smooth_with(&img, &k.kernel).pixels());
        Ok(())
    })
}

/// # Safety
/// `kernel` must be null or come from [`tc_discrete_gaussian_new`], and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_discrete_gaussian_free(kernel: *mut TcDiscreteGaussian) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Streaming feature pipeline; keeps the maps of the most recent frame.
pub struct TcPipeline {
    pipeline: Pipeline,
    outputs: Vec<FeatureFrame>,
}

/// Description of one feature map produced by the last pushed frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TcFeatureInfo {
    /// Position of the feature in the comma-separated list given at creation.
    pub feature_index: usize,
    pub spatial_index: usize,
    pub temporal_index: usize,
    pub frame_index: usize,
    pub width: usize,
    pub height: usize,
}

/// Creates a pipeline with default settings apart from the given scales and features.
///
/// `features` is a comma-separated list such as `"q2,laplacian"`. `stages` and `c`
/// select a logarithmic distribution; `c <= 0` selects the uniform one.
///
/// # Safety
/// The scale arrays must hold their stated lengths, `features` must be a NUL terminated
/// string and `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_pipeline_new(
    fps: f64,
    sigma_t_seconds: *const f64,
    temporal_scales: usize,
    sigma_x: *const f64,
    spatial_scales: usize,
    stages: usize,
    c: f64,
    features: *const c_char,
    out: *mut *mut TcPipeline,
) -> TcStatus {
    guard(|| {
        let features: Vec<FeatureKind> =
            lift(string(features)?.split(',').map(|s| s.trim().parse::<FeatureKind>()).collect())?;
        let config = PipelineConfig {
            fps,
            sigma_t_seconds: slice(sigma_t_seconds, temporal_scales)?.to_vec(),
            sigma_x: slice(sigma_x, spatial_scales)?.to_vec(),
            stages,
            distribution: if c <= 0.0 {
                TemporalDistribution::Uniform
            } else {
                TemporalDistribution::Logarithmic { c }
            },
            features,
            ..PipelineConfig::default()
        };
        let pipeline = lift(Pipeline::new(config))?;
        write_out(out, Box::into_raw(Box::new(TcPipeline { pipeline, outputs: Vec::new() })))
    })
}

/// Pushes one row-major frame and writes the number of feature maps it produced.
///
/// # Safety
/// `pipeline` must come from [`tc_pipeline_new`]; `pixels` must hold `width * height` values.
#[no_mangle]
pub unsafe extern "C" fn tc_pipeline_push_frame(
    pipeline: *mut TcPipeline,
    width: usize,
    height: usize,
    pixels: *const f64,
    produced: *mut usize,
) -> TcStatus {
    guard(|| {
        let p = pipeline.as_mut().ok_or_else(|| invalid("null pipeline"))?;
        let n = width.checked_mul(height).ok_or_else(|| invalid("image too large"))?;
        let img = lift(Image::new(width, height, slice(pixels, n)?.to_vec()))?;
        p.outputs = lift(p.pipeline.push_frame(&img))?;
        write_out(produced, p.outputs.len())
    })
}

/// Describes map `index` of the last pushed frame.
///
/// # Safety
/// `pipeline` must come from [`tc_pipeline_new`]; `info` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tc_pipeline_output_info(
    pipeline: *const TcPipeline,
    index: usize,
    info: *mut TcFeatureInfo,
) -> TcStatus {
    guard(|| {
        let p = pipeline.as_ref().ok_or_else(|| invalid("null pipeline"))?;
        let f = p.outputs.get(index).ok_or_else(|| invalid("output index out of range"))?;
        let feature_index = p.pipeline.config().features.iter().position(|k| *k == f.feature).unwrap_or(usize::MAX);
        let (width, height) = f.image.dims();
        write_out(
            info,
            TcFeatureInfo {
                feature_index,
                spatial_index: f.spatial_index,
                temporal_index: f.temporal_index,
                frame_index: f.frame_index,
                width,
                height,
            },
        )
    })
}

/// Copies map `index` of the last pushed frame into `pixels`, row-major.
///
/// # Safety
/// `pipeline` must come from [`tc_pipeline_new`]; `pixels` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tc_pipeline_output_copy(
    pipeline: *const TcPipeline,
    index: usize,
    pixels: *mut f64,
    len: usize,
) -> TcStatus {
    guard(|| {
        let p = pipeline.as_ref().ok_or_else(|| invalid("null pipeline"))?;
        let f = p.outputs.get(index).ok_or_else(|| invalid("output index out of range"))?;
        let src = f.image.pixels();
        if len < src.len() {
            return Err(invalid("pixel buffer too small"));
        }
        slice_mut(pixels, src.len())?.copy_from_slice(src);
        Ok(())
    })
}

/// Writes the recursive state so that processing can resume later.
///
/// # Safety
/// `pipeline` must come from [`tc_pipeline_new`]; `path` must be a NUL terminated string.
#[no_mangle]
pub unsafe extern "C" fn tc_pipeline_save_state(pipeline: *const TcPipeline, path: *const c_char) -> TcStatus {
    guard(|| {
        let p = pipeline.as_ref().ok_or_else(|| invalid("null pipeline"))?;
        lift(p.pipeline.save_state(Path::new(string(path)?)))
    })
}

/// # Safety
/// `pipeline` must be null or come from [`tc_pipeline_new`], and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_pipeline_free(pipeline: *mut TcPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}
