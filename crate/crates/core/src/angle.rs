//! Uniform scan-angle grids over an open angular window.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// A uniformly spaced grid of scan angles, stored in radians.
///
/// The window is given in degrees and must stay strictly inside
/// `(-90, 90)`: steering segments index direction through `sin(angle)`, which
/// stops being injective at the poles. Endpoints are included exactly, and a
/// symmetric window `(-a, a)` with an odd count places exactly `0.0` at the
/// middle index — several cross-checks rely on hitting broadside dead-on.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    min_deg: f64,
    max_deg: f64,
    angles: Vec<f64>,
}

impl AngleGrid {
    /// Builds a grid of `count` angles spanning `[min_deg, max_deg]`.
    ///
    /// Fails with [`Error::Domain`] unless `-90 < min_deg < max_deg < 90`
    /// and `count >= 2`.
    pub fn new(min_deg: f64, max_deg: f64, count: usize) -> Result<Self> {
        if !min_deg.is_finite() || !max_deg.is_finite() {
            return Err(Error::Domain(format!(
                "angle window must be finite, got [{min_deg}, {max_deg}]"
            )));
        }
        if !(min_deg > -90.0 && min_deg < max_deg && max_deg < 90.0) {
            return Err(Error::Domain(format!(
                "angle window must satisfy -90 < min < max < 90, got [{min_deg}, {max_deg}]"
            )));
        }
        if count < 2 {
            return Err(Error::Domain(format!(
                "angle grid needs at least 2 points, got {count}"
            )));
        }
        // Interior points interpolate between the endpoints; the endpoints
        // themselves are taken verbatim so no rounding creeps in, and a
        // symmetric window cancels to exactly zero at the middle index.
        let denom = (count - 1) as f64;
        let angles = (0..count)
            .map(|i| {
                let deg = if i == 0 {
                    min_deg
                } else if i == count - 1 {
                    max_deg
                } else {
                    (min_deg * (count - 1 - i) as f64 + max_deg * i as f64) / denom
                };
                Float::to_radians(deg)
            })
            .collect();
        Ok(Self { min_deg, max_deg, angles })
    }

    /// Window lower edge, in degrees.
    pub fn min_deg(&self) -> f64 {
        self.min_deg
    }

    /// Window upper edge, in degrees.
    pub fn max_deg(&self) -> f64 {
        self.max_deg
    }

    /// Number of grid points (always at least 2).
    pub fn count(&self) -> usize {
        self.angles.len()
    }

    /// All angles in radians, ascending.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Grid spacing in radians (exact for the first interval, representative
    /// for all: spacing is uniform to within 1e-12 relative).
    pub fn step(&self) -> f64 {
        self.angles[1] - self.angles[0]
    }
}
