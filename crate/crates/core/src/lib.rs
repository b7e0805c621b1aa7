//! Time-causal and time-recursive spatio-temporal scale-space.
//!
//! The temporal axis is smoothed by cascades of first-order integrators
//! (truncated exponential kernels), either with uniformly or logarithmically
//! distributed scale levels. The spatial axes use the discrete analogue of the
//! Gaussian kernel. On top of these sit scale-normalized derivatives and a set
//! of spatio-temporal differential invariants, evaluated in a single streaming
//! pass with memory independent of the sequence length.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod image;
pub mod io;
pub mod kernels;
pub mod normalization;
pub mod pipeline;
pub mod quad;
pub mod recursive;
pub mod scales;
pub mod spatial;
pub mod synth;
pub mod tables;

pub mod cli;

pub use error::{Error, Result};
pub use image::Image;
pub use scales::{DistributionKind, ScaleDistribution};
