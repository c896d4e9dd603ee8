//! Cartesian 3D point clouds.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An unordered set of 3D points in the camera/sensor frame.
///
/// Coordinates follow the usual pinhole convention: `x` right, `y` down,
/// `z` forward (optical axis). All coordinates are finite; this is the only
/// structural invariant — clouds may be empty, and operations that need at
/// least one point say so and fail with [`Error::Degenerate`] otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates with [`Error::Domain`].
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::Domain(format!(
                    "point {i} has non-finite coordinates [{}, {}, {}]",
                    p[0], p[1], p[2]
                )));
            }
        }
        Ok(Self { points })
    }

    /// An empty cloud.
    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn iter(&self) -> core::slice::Iter<'_, [f64; 3]> {
        self.points.iter()
    }
}
