//! Stand-off viscometry from videos of a stirred, refracting free surface.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! - [`dataset`]: fluid property table, target normalization, manifests and the
//!   raw `VNV1` video container.
//! - [`synth`]: background patterns, an analytic combined-vortex free surface and
//!   a single-refraction renderer that turns both into labelled videos.
//! - [`nn`]: the small set of layers (with hand-written backward passes) the
//!   estimator is built from.
//! - [`model`]: tubelet tokenization, rotation-speed conditioning, transformer
//!   encoder, classification head and Gaussian-mixture regression head.
//! - [`train`]: losses and the curriculum (pretrain, fine-tune, regress),
//!   plus the data-efficiency and multi-pattern experiment harnesses.
//! - [`uq`]: mixture CDF/quantiles, coverage, global sigma scaling, calibration
//!   error, sparsification curves and AUSE.
//! - [`analysis`]: dimensionless numbers, class proximity, confusion matrices and
//!   attention-map binning.
//! - [`cli`]: the command implementations behind the `viscnet` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod model;
pub mod nn;
pub mod seed;
pub mod synth;
pub mod train;
pub mod uq;

pub use error::{Error, Result};
