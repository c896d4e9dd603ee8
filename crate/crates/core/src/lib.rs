//! Spatial spectrum encoding for radar depth maps and camera segmentation masks.
//!
//! Radar detections arrive as sparse point clouds while camera segmentation
//! masks are dense rasters; compared pixel-for-pixel the two modalities barely
//! correlate. Both, however, can be pushed through the same family of
//! non-linear phase-progression steering segments and accumulated into a 2D
//! spatial power spectrum over an azimuth/elevation window. In that shared
//! domain the modalities become directly comparable — and one becomes a
//! training target for enhancing the other.
//!
//! The crate provides:
//!
//! * [`basis`] — steering segment construction, segment covariance, joint 2D
//!   periodograms, and the classic segment-averaged 1D estimator used as a
//!   cross-check;
//! * [`spectrum`] — the image-to-spectrum encoder and the radar/camera
//!   transform front-ends;
//! * [`geometry`] — pinhole projection between point clouds and depth maps,
//!   and spectrum-to-cloud back-projection;
//! * [`metrics`] — the evaluation suite (MAE, REL, Chamfer distances,
//!   Pearson, mutual information, MSE, SSIM);
//! * [`learner`] — a small fixed-architecture convolutional spectrum enhancer
//!   with full-batch training and finite-difference gradient checking.
//!
//! Everything here is deterministic: the same inputs (and seeds) produce
//! bit-identical outputs, which the downstream pipeline relies on.
//!
//! The crate is `no_std`-compatible (an allocator is required); disable the
//! default `std` feature for embedded targets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod angle;
pub mod basis;
pub mod cloud;
pub mod error;
pub mod geometry;
pub mod learner;
pub mod metrics;
pub mod raster;
pub mod spectrum;

pub use angle::AngleGrid;
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use geometry::CameraModel;
pub use raster::PixelGrid;
pub use spectrum::{EncodingConfig, Spectrum};

/// Complex scalar used by the steering-segment machinery, re-exported so
/// callers can build [`basis::ComplexMatrix`] signals without naming the
/// underlying crate.
pub use num_complex::Complex64;
