//! Benchmark pipeline for EEG-based emotion recognition.
//!
//! The crate is organised along the stages of a benchmark run:
//!
//! - [`corpus`]: uniform `(session, subject, trial)` data model, on-disk format,
//!   manifest validation and a seeded synthetic EEG generator.
//! - [`preprocess`]: bandpass filtering, PCA artifact removal, band
//!   decomposition, DE / PSD features, LDS smoothing and segmentation.
//! - [`split`]: leakage-safe train / validation / test planning for the four
//!   task kinds.
//! - [`nn`]: a small reverse-mode autodiff engine and one model per
//!   architecture family (linear hinge, MLP, graph convolution).
//! - [`harness`]: seeded training, confusion-matrix metrics and epoch
//!   selection policies.
//! - [`bench`]: grid orchestration, aggregation, rank-sum scoring and report
//!   emission.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod corpus;
pub mod harness;
pub mod nn;
pub mod preprocess;
pub mod seed;
pub mod split;

pub use corpus::{Manifest, TrialKey, UniformDataset};
