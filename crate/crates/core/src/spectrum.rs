//! Image-to-spectrum encoding and the radar/camera transform front-ends.
//!
//! The encoder turns any 2D raster into a spatial power spectrum over an
//! azimuth grid `phi` (N directions) and an elevation grid `theta`
//! (K directions). Steering the joint periodogram to direction `(n, k)` and
//! accumulating its overlap with the image gives
//!
//! ```text
//! P(n, k) = sum_{a,b} |I(a, b)| * |y_theta(k)[a]| * |y_phi(n)[b]|
//! ```
//!
//! where `I` is the image resampled to `K x N` (rows follow elevation,
//! columns follow azimuth) and `y_.` are covariance rows of the two segment
//! bases. Because the joint periodogram is rank 1, the double sum factors:
//! the encoder computes `W = |I| * |C_phi|^T` once per image and then
//! `P = (|C_theta| * W)^T`, turning an `O(N*K*N*K)` accumulation into two
//! matrix products. The unfactored double loop survives in the tests as the
//! reference the fast path is checked against.
//!
//! Two front-ends wrap the encoder: [`transform_radar`] normalizes a depth
//! map and encodes it with the radar segment count, [`transform_camera`]
//! binarizes (or class-weights) a segmentation mask and encodes it with the
//! (strictly larger) camera segment count. The camera spectrum is the
//! sharper of the two — that asymmetry is what makes it a useful training
//! target for enhancing the radar spectrum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::angle::AngleGrid;
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::raster::PixelGrid;

// ── Spectrum ────────────────────────────────────────────────────────────────

/// A non-negative spatial power spectrum over an azimuth/elevation window.
///
/// The grid is indexed `(n, k)`: `rows == phi.count()` azimuth directions,
/// `cols == theta.count()` elevation directions. The segment count the
/// spectrum was encoded with is carried along — downstream consumers compare
/// spectra of different sharpness and need to know which is which.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: PixelGrid,
    m_segments: usize,
    phi: AngleGrid,
    theta: AngleGrid,
}

impl Spectrum {
    /// Wraps a raster as a spectrum, enforcing the shape and sign invariants.
    pub fn new(grid: PixelGrid, m_segments: usize, phi: AngleGrid, theta: AngleGrid) -> Result<Self> {
        if m_segments == 0 {
            return Err(Error::Domain("m_segments must be at least 1".into()));
        }
        if grid.rows() != phi.count() || grid.cols() != theta.count() {
            return Err(Error::Domain(format!(
                "spectrum grid is {}x{} but angle grids are {} (phi) x {} (theta)",
                grid.rows(),
                grid.cols(),
                phi.count(),
                theta.count()
            )));
        }
        if let Some(v) = grid.values().iter().find(|&&v| v < 0.0) {
            return Err(Error::Domain(format!("spectrum values must be non-negative, got {v}")));
        }
        Ok(Self { grid, m_segments, phi, theta })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn m_segments(&self) -> usize {
        self.m_segments
    }

    pub fn phi(&self) -> &AngleGrid {
        &self.phi
    }

    pub fn theta(&self) -> &AngleGrid {
        &self.theta
    }

    /// Min-max normalized copy (values in `[0, 1]`).
    pub fn normalized(&self) -> Spectrum {
        Spectrum {
            grid: self.grid.normalized(),
            m_segments: self.m_segments,
            phi: self.phi.clone(),
            theta: self.theta.clone(),
        }
    }

    /// Dynamic-range compressed copy: every value `v` becomes `ln(1 + v)`.
    pub fn log_compressed(&self) -> Spectrum {
        let values = self.grid.values().iter().map(|&v| Float::ln_1p(v)).collect();
        Spectrum {
            grid: PixelGrid::from_raw(self.grid.rows(), self.grid.cols(), values),
            m_segments: self.m_segments,
            phi: self.phi.clone(),
            theta: self.theta.clone(),
        }
    }
}

// ── Encoder ─────────────────────────────────────────────────────────────────

/// A reusable image-to-spectrum encoder for one `(M, phi, theta)` triple.
///
/// Building the encoder computes both segment covariances (`O(L^2 * M)`
/// each); encoding an image afterwards costs two small matrix products.
/// Build once, encode many — the sweep and the batch pipeline depend on it.
#[derive(Debug, Clone)]
pub struct SpectrumEncoder {
    m_segments: usize,
    phi: AngleGrid,
    theta: AngleGrid,
    /// `|C_phi|`, N x N, row-major.
    abs_phi: Vec<f64>,
    /// `|C_theta|`, K x K, row-major.
    abs_theta: Vec<f64>,
}

impl SpectrumEncoder {
    pub fn new(m_segments: usize, phi: &AngleGrid, theta: &AngleGrid) -> Result<Self> {
        let basis_phi = BasisSet::new(m_segments, phi)?;
        let basis_theta = BasisSet::new(m_segments, theta)?;
        let abs_of = |basis: &BasisSet| basis.covariance().data().iter().map(|z| z.norm()).collect();
        Ok(Self {
            m_segments,
            phi: phi.clone(),
            theta: theta.clone(),
            abs_phi: abs_of(&basis_phi),
            abs_theta: abs_of(&basis_theta),
        })
    }

    pub fn m_segments(&self) -> usize {
        self.m_segments
    }

    pub fn phi(&self) -> &AngleGrid {
        &self.phi
    }

    pub fn theta(&self) -> &AngleGrid {
        &self.theta
    }

    /// Encodes `image` into an `N x K` power spectrum.
    ///
    /// The image is first resampled (nearest-neighbour) to `K` rows by `N`
    /// columns so each pixel lines up with one steered direction pair; its
    /// magnitudes then weight the periodogram accumulation. Output values
    /// are non-negative by construction.
    pub fn encode(&self, image: &PixelGrid) -> Spectrum {
        let n_len = self.phi.count();
        let k_len = self.theta.count();
        // Shapes are positive, so the resample cannot fail.
        let img = image
            .resample_nearest(k_len, n_len)
            .expect("angle grids have at least 2 points");

        // W(a, n) = sum_b |I(a, b)| * |C_phi(n, b)|
        let mut w = alloc::vec![0.0f64; k_len * n_len];
        for a in 0..k_len {
            let img_row = img.row(a);
            for n in 0..n_len {
                let phi_row = &self.abs_phi[n * n_len..(n + 1) * n_len];
                let mut acc = 0.0;
                for b in 0..n_len {
                    acc += Float::abs(img_row[b]) * phi_row[b];
                }
                w[a * n_len + n] = acc;
            }
        }

        // P(n, k) = sum_a |C_theta(k, a)| * W(a, n)
        let mut p = alloc::vec![0.0f64; n_len * k_len];
        for k in 0..k_len {
            let theta_row = &self.abs_theta[k * k_len..(k + 1) * k_len];
            for n in 0..n_len {
                let mut acc = 0.0;
                for a in 0..k_len {
                    acc += theta_row[a] * w[a * n_len + n];
                }
                p[n * k_len + k] = acc;
            }
        }

        Spectrum {
            grid: PixelGrid::from_raw(n_len, k_len, p),
            m_segments: self.m_segments,
            phi: self.phi.clone(),
            theta: self.theta.clone(),
        }
    }
}

/// One-shot encode: builds a throwaway [`SpectrumEncoder`] and applies it.
///
/// Prefer holding an encoder when processing more than one image with the
/// same segment count and grids.
pub fn estimate_spectrum(
    image: &PixelGrid,
    m_segments: usize,
    phi: &AngleGrid,
    theta: &AngleGrid,
) -> Result<Spectrum> {
    Ok(SpectrumEncoder::new(m_segments, phi, theta)?.encode(image))
}

// ── Encoding configuration ──────────────────────────────────────────────────

/// Shared configuration for a radar/camera spectrum pair.
///
/// The camera always gets strictly more segments than the radar: the camera
/// spectrum is the high-resolution target, the radar spectrum the coarse
/// input. Construction rejects anything else.
#[derive(Debug, Clone)]
pub struct EncodingConfig {
    m_radar: usize,
    m_cam: usize,
    phi: AngleGrid,
    theta: AngleGrid,
    log_compress: bool,
}

impl EncodingConfig {
    pub fn new(
        m_radar: usize,
        m_cam: usize,
        phi: AngleGrid,
        theta: AngleGrid,
        log_compress: bool,
    ) -> Result<Self> {
        if m_radar == 0 {
            return Err(Error::Domain("m_radar must be at least 1".into()));
        }
        if m_cam <= m_radar {
            return Err(Error::Domain(format!(
                "m_cam must exceed m_radar, got m_cam={m_cam} <= m_radar={m_radar}"
            )));
        }
        Ok(Self { m_radar, m_cam, phi, theta, log_compress })
    }

    pub fn m_radar(&self) -> usize {
        self.m_radar
    }

    pub fn m_cam(&self) -> usize {
        self.m_cam
    }

    pub fn phi(&self) -> &AngleGrid {
        &self.phi
    }

    pub fn theta(&self) -> &AngleGrid {
        &self.theta
    }

    pub fn log_compress(&self) -> bool {
        self.log_compress
    }
}

// ── Radar and camera transforms ─────────────────────────────────────────────

/// Radar front-end: min-max normalizes the depth map, encodes it with the
/// radar segment count, and optionally log-compresses the result.
pub fn transform_radar(depth_map: &PixelGrid, config: &EncodingConfig) -> Result<Spectrum> {
    let encoder = SpectrumEncoder::new(config.m_radar, &config.phi, &config.theta)?;
    Ok(transform_radar_with(&encoder, depth_map, config.log_compress))
}

/// [`transform_radar`] against a prebuilt encoder (the batch-friendly form).
pub fn transform_radar_with(
    encoder: &SpectrumEncoder,
    depth_map: &PixelGrid,
    log_compress: bool,
) -> Spectrum {
    let spectrum = encoder.encode(&depth_map.normalized());
    if log_compress {
        spectrum.log_compressed()
    } else {
        spectrum
    }
}

/// Camera front-end: validates the integer class mask, collapses it to a
/// binary occupancy raster (any class > 0 becomes 1), encodes with the
/// camera segment count, and optionally log-compresses.
///
/// Fails with [`Error::Domain`] if any mask value is negative or further
/// than `1e-9` from an integer.
pub fn transform_camera(mask: &PixelGrid, config: &EncodingConfig) -> Result<Spectrum> {
    let encoder = SpectrumEncoder::new(config.m_cam, &config.phi, &config.theta)?;
    transform_camera_with(&encoder, mask, config.log_compress)
}

/// [`transform_camera`] against a prebuilt encoder.
pub fn transform_camera_with(
    encoder: &SpectrumEncoder,
    mask: &PixelGrid,
    log_compress: bool,
) -> Result<Spectrum> {
    let binary = binarize_mask(mask, None)?;
    let spectrum = encoder.encode(&binary);
    Ok(if log_compress { spectrum.log_compressed() } else { spectrum })
}

/// Class-weighted camera front-end: instead of collapsing every foreground
/// class to 1, each class id maps through `weights` (absent classes and the
/// background class 0 contribute nothing).
///
/// Fails with [`Error::Domain`] on invalid mask values or on weights that
/// are negative or non-finite.
pub fn transform_camera_weighted(
    mask: &PixelGrid,
    config: &EncodingConfig,
    weights: &BTreeMap<u32, f64>,
) -> Result<Spectrum> {
    for (&class, &w) in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Domain(format!("weight for class {class} must be finite and non-negative, got {w}")));
        }
    }
    let encoder = SpectrumEncoder::new(config.m_cam, &config.phi, &config.theta)?;
    let weighted = binarize_mask(mask, Some(weights))?;
    let spectrum = encoder.encode(&weighted);
    Ok(if config.log_compress { spectrum.log_compressed() } else { spectrum })
}

/// Validates a class mask and maps it to occupancy values.
///
/// With `weights == None` every positive class becomes `1.0`; with a weight
/// table, class `c > 0` becomes `weights[c]` (default `0.0`). Background
/// (class 0) is always `0.0`.
fn binarize_mask(mask: &PixelGrid, weights: Option<&BTreeMap<u32, f64>>) -> Result<PixelGrid> {
    let mut values = Vec::with_capacity(mask.len());
    for &v in mask.values() {
        let rounded = Float::round(v);
        if Float::abs(v - rounded) > 1e-9 {
            return Err(Error::Domain(format!("mask value {v} is not an integer class id")));
        }
        if rounded < 0.0 {
            return Err(Error::Domain(format!("mask value {v} is a negative class id")));
        }
        if rounded > u32::MAX as f64 {
            return Err(Error::Domain(format!("mask class id {v} exceeds the supported range")));
        }
        let class = rounded as u32;
        let occupancy = match (class, weights) {
            (0, _) => 0.0,
            (_, None) => 1.0,
            (c, Some(table)) => table.get(&c).copied().unwrap_or(0.0),
        };
        values.push(occupancy);
    }
    Ok(PixelGrid::from_raw(mask.rows(), mask.cols(), values))
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::joint_periodogram;
    use alloc::vec;

    /// Reference accumulation: steer the full joint periodogram to every
    /// `(n, k)` and sum its magnitude overlap with the resampled image.
    /// Quadratic in the grid sizes, so only used on small cases.
    fn direct_spectrum(
        image: &PixelGrid,
        m_segments: usize,
        phi: &AngleGrid,
        theta: &AngleGrid,
    ) -> PixelGrid {
        let b_phi = BasisSet::new(m_segments, phi).unwrap();
        let b_theta = BasisSet::new(m_segments, theta).unwrap();
        let img = image.resample_nearest(theta.count(), phi.count()).unwrap();
        PixelGrid::from_fn(phi.count(), theta.count(), |n, k| {
            let joint = joint_periodogram(&b_phi, &b_theta, n, k).unwrap();
            let mut acc = 0.0;
            for a in 0..theta.count() {
                for b in 0..phi.count() {
                    acc += (joint.matrix().get(a, b) * img.get(a, b)).norm();
                }
            }
            acc
        })
        .unwrap()
    }

    /// Deterministic pseudo-random values without pulling in an RNG.
    fn lcg_image(rows: usize, cols: usize, seed: u64) -> PixelGrid {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        PixelGrid::from_fn(rows, cols, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    fn assert_close_rel(a: f64, b: f64, tol: f64) {
        let scale = a.abs().max(b.abs()).max(1e-300);
        assert!((a - b).abs() / scale <= tol, "{a} vs {b}");
    }

    #[test]
    fn factored_encoder_matches_direct_accumulation() {
        let cases = [
            (5usize, 7usize, 6usize, 9usize, 3usize), // image resampled up
            (9, 6, 5, 4, 2),                          // image resampled down
            (4, 6, 6, 4, 5),                          // image already K x N
        ];
        for (ir, ic, n_phi, k_theta, m) in cases {
            let phi = AngleGrid::new(-70.0, 70.0, n_phi).unwrap();
            let theta = AngleGrid::new(-55.0, 55.0, k_theta).unwrap();
            let image = lcg_image(ir, ic, (ir * 31 + ic) as u64);
            let fast = estimate_spectrum(&image, m, &phi, &theta).unwrap();
            let slow = direct_spectrum(&image, m, &phi, &theta);
            assert_eq!(fast.grid().rows(), n_phi);
            assert_eq!(fast.grid().cols(), k_theta);
            for n in 0..n_phi {
                for k in 0..k_theta {
                    assert_close_rel(fast.grid().get(n, k), slow.get(n, k), 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_pixel_image_reproduces_kernel_product() {
        // With exactly one lit pixel at (a0, b0), the accumulation collapses
        // to |C_theta(k, a0)| * |C_phi(n, b0)|.
        let phi = AngleGrid::new(-70.0, 70.0, 11).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 9).unwrap();
        let (a0, b0) = (4usize, 5usize);
        let image =
            PixelGrid::from_fn(9, 11, |r, c| if r == a0 && c == b0 { 1.0 } else { 0.0 }).unwrap();
        let m = 6;
        let spec = estimate_spectrum(&image, m, &phi, &theta).unwrap();
        let b_phi = BasisSet::new(m, &phi).unwrap();
        let b_theta = BasisSet::new(m, &theta).unwrap();
        for n in 0..11 {
            for k in 0..9 {
                let want = b_theta.covariance().get(k, a0).norm()
                    * b_phi.covariance().get(n, b0).norm();
                assert_close_rel(spec.grid().get(n, k), want, 1e-12);
            }
        }
        // The peak sits at the steered pair matching the pixel.
        let peak = spec.grid().get(b0, a0);
        assert_close_rel(peak, 1.0, 1e-12);
    }

    #[test]
    fn zero_image_encodes_to_zero_spectrum() {
        let phi = AngleGrid::new(-70.0, 70.0, 8).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 8).unwrap();
        let image = PixelGrid::zeros(5, 5).unwrap();
        let spec = estimate_spectrum(&image, 4, &phi, &theta).unwrap();
        assert!(spec.grid().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encoding_is_deterministic() {
        let phi = AngleGrid::new(-70.0, 70.0, 16).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 12).unwrap();
        let image = lcg_image(10, 14, 99);
        let a = estimate_spectrum(&image, 7, &phi, &theta).unwrap();
        let b = estimate_spectrum(&image, 7, &phi, &theta).unwrap();
        assert_eq!(a.grid().values(), b.grid().values());
    }

    #[test]
    fn estimate_spectrum_rejects_zero_segments() {
        let phi = AngleGrid::new(-70.0, 70.0, 4).unwrap();
        let image = PixelGrid::zeros(3, 3).unwrap();
        assert!(matches!(
            estimate_spectrum(&image, 0, &phi, &phi),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spectrum_new_validates_shape_and_sign() {
        let phi = AngleGrid::new(-70.0, 70.0, 3).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 2).unwrap();
        let ok = PixelGrid::zeros(3, 2).unwrap();
        assert!(Spectrum::new(ok.clone(), 4, phi.clone(), theta.clone()).is_ok());
        let wrong_shape = PixelGrid::zeros(2, 3).unwrap();
        assert!(matches!(
            Spectrum::new(wrong_shape, 4, phi.clone(), theta.clone()),
            Err(Error::Domain(_))
        ));
        let negative = PixelGrid::new(3, 2, vec![0.0, 0.0, -0.1, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            Spectrum::new(negative, 4, phi, theta),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn encoding_config_requires_sharper_camera() {
        let phi = AngleGrid::new(-70.0, 70.0, 4).unwrap();
        assert!(EncodingConfig::new(20, 200, phi.clone(), phi.clone(), true).is_ok());
        assert!(matches!(
            EncodingConfig::new(20, 20, phi.clone(), phi.clone(), true),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EncodingConfig::new(200, 20, phi.clone(), phi.clone(), true),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EncodingConfig::new(0, 5, phi.clone(), phi, true),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn radar_transform_is_scale_invariant_and_log_compresses() {
        let phi = AngleGrid::new(-70.0, 70.0, 10).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 10).unwrap();
        let depth = lcg_image(8, 8, 7);
        let scaled = PixelGrid::new(
            8,
            8,
            depth.values().iter().map(|v| v * 37.5).collect(),
        )
        .unwrap();

        let cfg_raw = EncodingConfig::new(6, 12, phi.clone(), theta.clone(), false).unwrap();
        let a = transform_radar(&depth, &cfg_raw).unwrap();
        let b = transform_radar(&scaled, &cfg_raw).unwrap();
        for (x, y) in a.grid().values().iter().zip(b.grid().values()) {
            assert_close_rel(*x, *y, 1e-12);
        }

        let cfg_log = EncodingConfig::new(6, 12, phi, theta, true).unwrap();
        let c = transform_radar(&depth, &cfg_log).unwrap();
        for (raw, logged) in a.grid().values().iter().zip(c.grid().values()) {
            assert_close_rel(raw.ln_1p(), *logged, 1e-12);
        }
        assert_eq!(c.m_segments(), 6);
    }

    #[test]
    fn camera_transform_binarizes_classes() {
        let phi = AngleGrid::new(-70.0, 70.0, 9).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 9).unwrap();
        let cfg = EncodingConfig::new(3, 8, phi.clone(), theta.clone(), false).unwrap();
        // Classes 0, 1, 2 — plus an entry within integer tolerance.
        let mask = PixelGrid::new(
            2,
            3,
            vec![0.0, 1.0, 2.0, 2.0 + 5e-10, 0.0, 1.0],
        )
        .unwrap();
        let got = transform_camera(&mask, &cfg).unwrap();
        let binary = PixelGrid::new(2, 3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        let want = estimate_spectrum(&binary, 8, &phi, &theta).unwrap();
        assert_eq!(got.grid(), want.grid());
        assert_eq!(got.m_segments(), 8);
    }

    #[test]
    fn camera_transform_rejects_invalid_masks() {
        let phi = AngleGrid::new(-70.0, 70.0, 5).unwrap();
        let cfg = EncodingConfig::new(3, 8, phi.clone(), phi.clone(), false).unwrap();
        let fractional = PixelGrid::new(1, 2, vec![0.5, 1.0]).unwrap();
        assert!(matches!(transform_camera(&fractional, &cfg), Err(Error::Domain(_))));
        let negative = PixelGrid::new(1, 2, vec![-1.0, 1.0]).unwrap();
        assert!(matches!(transform_camera(&negative, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn weighted_camera_transform_applies_class_weights() {
        let phi = AngleGrid::new(-70.0, 70.0, 9).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 7).unwrap();
        let cfg = EncodingConfig::new(3, 8, phi.clone(), theta.clone(), false).unwrap();
        let mask = PixelGrid::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let mut weights = BTreeMap::new();
        weights.insert(1u32, 0.5);
        weights.insert(2u32, 2.0);
        // Class 3 is absent from the table and contributes nothing.
        let got = transform_camera_weighted(&mask, &cfg, &weights).unwrap();
        let remapped = PixelGrid::new(2, 2, vec![0.0, 0.5, 2.0, 0.0]).unwrap();
        let want = estimate_spectrum(&remapped, 8, &phi, &theta).unwrap();
        assert_eq!(got.grid(), want.grid());

        let mut bad = BTreeMap::new();
        bad.insert(1u32, -0.5);
        assert!(matches!(
            transform_camera_weighted(&mask, &cfg, &bad),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn normalized_spectrum_spans_unit_interval() {
        let phi = AngleGrid::new(-70.0, 70.0, 12).unwrap();
        let theta = AngleGrid::new(-70.0, 70.0, 12).unwrap();
        let image = lcg_image(6, 6, 3);
        let spec = estimate_spectrum(&image, 5, &phi, &theta).unwrap().normalized();
        assert_eq!(spec.grid().min_value(), 0.0);
        assert_eq!(spec.grid().max_value(), 1.0);
    }
}
