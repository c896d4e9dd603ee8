//! Pinhole geometry: clouds to inverse-depth maps and spectra back to clouds.
//!
//! Depth maps use the *inverse depth* convention throughout: a pixel hit by
//! a point at range `z` stores `depth_min / z`, so values live in `(0, 1]`,
//! near surfaces are bright, and empty pixels are exactly `0`. When several
//! points fall into one pixel the nearest wins — equivalently, the stored
//! value is the per-pixel maximum.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::raster::PixelGrid;
use crate::spectrum::Spectrum;

/// Intrinsics and depth window of a pinhole camera.
///
/// Axes follow the usual convention: `x` right, `y` down, `z` forward along
/// the optical axis. `fx`/`fy` are focal lengths in pixels, `(cx, cy)` the
/// principal point, `width`/`height` the image size in pixels, and
/// `[depth_min, depth_max]` the usable range window (`depth_min > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    depth_min: f64,
    depth_max: f64,
}

impl CameraModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        depth_min: f64,
        depth_max: f64,
    ) -> Result<Self> {
        for (name, v) in [("fx", fx), ("fy", fy), ("cx", cx), ("cy", cy)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("camera {name} must be finite, got {v}")));
            }
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::Domain(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        if cx < 0.0 || cx >= width as f64 || cy < 0.0 || cy >= height as f64 {
            return Err(Error::Domain(format!(
                "principal point ({cx}, {cy}) must lie inside the {width}x{height} image"
            )));
        }
        if !(depth_min.is_finite() && depth_max.is_finite() && 0.0 < depth_min && depth_min < depth_max) {
            return Err(Error::Domain(format!(
                "depth window must satisfy 0 < min < max, got [{depth_min}, {depth_max}]"
            )));
        }
        Ok(Self { fx, fy, cx, cy, width, height, depth_min, depth_max })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth_min(&self) -> f64 {
        self.depth_min
    }

    pub fn depth_max(&self) -> f64 {
        self.depth_max
    }
}

/// Projects a point cloud into an inverse-depth map of `height x width`.
///
/// Each point at `(x, y, z)` maps to pixel
/// `(row, col) = (round(fy * y / z + cy), round(fx * x / z + cx))` (ties
/// round away from zero). Points behind the camera, outside the depth
/// window, or off the image are silently discarded; collisions keep the
/// nearest point. Pixels nothing hits stay `0.0`.
pub fn project_to_depth_map(cloud: &PointCloud, camera: &CameraModel) -> PixelGrid {
    let mut values = vec![0.0f64; camera.height * camera.width];
    for p in cloud.iter() {
        let (x, y, z) = (p[0], p[1], p[2]);
        if z < camera.depth_min || z > camera.depth_max {
            continue;
        }
        let u = Float::round(camera.fx * x / z + camera.cx);
        let v = Float::round(camera.fy * y / z + camera.cy);
        if u < 0.0 || v < 0.0 || u >= camera.width as f64 || v >= camera.height as f64 {
            continue;
        }
        let idx = v as usize * camera.width + u as usize;
        let inv = camera.depth_min / z;
        if inv > values[idx] {
            values[idx] = inv;
        }
    }
    PixelGrid::from_raw(camera.height, camera.width, values)
}

/// Unprojects an inverse-depth map back into a point cloud, one point per
/// nonzero pixel.
///
/// This is the inverse of [`project_to_depth_map`] up to pixel rounding: a
/// pixel `(row, col)` with value `v > 0` recovers `z = depth_min / v` and the
/// ray through the pixel centre, `x = (col - cx) * z / fx`,
/// `y = (row - cy) * z / fy`. For clouds whose points land on distinct
/// pixels, the round trip recovers each point within the half-pixel metric
/// footprint at its depth. Zero pixels emit nothing.
pub fn depth_map_to_point_cloud(map: &PixelGrid, camera: &CameraModel) -> Result<PointCloud> {
    if map.rows() != camera.height || map.cols() != camera.width {
        return Err(Error::Domain(format!(
            "depth map is {}x{} but the camera image is {}x{}",
            map.rows(),
            map.cols(),
            camera.height,
            camera.width
        )));
    }
    let mut points = Vec::new();
    for row in 0..map.rows() {
        for col in 0..map.cols() {
            let v = map.get(row, col);
            if v <= 0.0 {
                continue;
            }
            let z = camera.depth_min / v;
            let x = (col as f64 - camera.cx) * z / camera.fx;
            let y = (row as f64 - camera.cy) * z / camera.fy;
            points.push([x, y, z]);
        }
    }
    PointCloud::new(points)
}

/// Back-projects the bright cells of a spectrum into a 3D point cloud.
///
/// The spectrum is min-max normalized and every cell `(n, k)` at or above
/// `threshold` becomes a candidate. Its range is read from the matching cell
/// of `depth_hint`; candidates whose hint falls outside the camera depth
/// window are dropped, as are direction pairs steered outside the forward
/// hemisphere (`sin^2(phi) + sin^2(theta) > 1`). Survivors become
///
/// ```text
/// p = (r * sin(phi_n),  r * sin(theta_k),  r * sqrt(1 - sin^2 - sin^2))
/// ```
///
/// so every emitted point satisfies `|p| == r` exactly (up to rounding).
///
/// Fails with [`Error::Domain`] unless `0 < threshold < 1` and `depth_hint`
/// has the spectrum's shape. The result may be empty.
pub fn spectrum_to_point_cloud(
    spectrum: &Spectrum,
    depth_hint: &PixelGrid,
    camera: &CameraModel,
    threshold: f64,
) -> Result<PointCloud> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "threshold must lie strictly between 0 and 1, got {threshold}"
        )));
    }
    let grid = spectrum.grid();
    if depth_hint.rows() != grid.rows() || depth_hint.cols() != grid.cols() {
        return Err(Error::Domain(format!(
            "depth hint is {}x{} but the spectrum is {}x{}",
            depth_hint.rows(),
            depth_hint.cols(),
            grid.rows(),
            grid.cols()
        )));
    }

    let normalized = grid.normalized();
    let sin_phi: Vec<f64> = spectrum.phi().angles().iter().map(|&a| Float::sin(a)).collect();
    let sin_theta: Vec<f64> = spectrum.theta().angles().iter().map(|&a| Float::sin(a)).collect();

    let mut points = Vec::new();
    for n in 0..grid.rows() {
        for k in 0..grid.cols() {
            if normalized.get(n, k) < threshold {
                continue;
            }
            let r = depth_hint.get(n, k);
            if r < camera.depth_min || r > camera.depth_max {
                continue;
            }
            let s2 = sin_phi[n] * sin_phi[n] + sin_theta[k] * sin_theta[k];
            if s2 > 1.0 + 1e-12 {
                continue;
            }
            let z = r * Float::sqrt(Float::max(1.0 - s2, 0.0));
            points.push([r * sin_phi[n], r * sin_theta[k], z]);
        }
    }
    // Coordinates are products of finite values, so this cannot fail.
    Ok(PointCloud::new(points).expect("back-projected coordinates are finite"))
}
