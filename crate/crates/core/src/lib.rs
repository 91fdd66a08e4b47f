//! Forensic degradation benchmark.
//!
//! Synthesizes seven forensic image degradations, drives face-recognition
//! trials through pluggable enhancement and embedding backends, and computes
//! the evaluation statistics (accuracy, precision, recall, F1, percentile
//! bootstrap intervals, Cohen's d) together with the per-degradation tables.
//!
//! Module map:
//!
//! * [`imagecore`]: RGB raster buffer, PNG/JPEG codecs, bicubic resampling, convolution.
//! * [`degrade`]: the degradation operators and seeded parameter sampling.
//! * [`diffmath`]: latent shape, LoRA merge, conditioning, guidance and timestep numerics.
//! * [`evalcore`]: matching, ROC threshold selection, metrics, bootstrap, effect size.
//! * [`harness`]: dataset ingestion, backends, experiment runner, reports.

pub mod degrade;
pub mod diffmath;
pub mod error;
pub mod evalcore;
pub mod harness;
pub mod imagecore;
pub mod selftest;

pub use error::{Error, Result};
