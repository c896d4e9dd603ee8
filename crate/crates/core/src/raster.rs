//! Dense row-major rasters: depth maps, segmentation masks, spectra.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// A dense, row-major 2D raster of finite `f64` samples.
///
/// The same type carries depth maps (values in `(0, 1]` under the inverse
/// depth convention), segmentation masks (small non-negative class ids) and
/// power spectra (non-negative reals). Dimensions are always positive and
/// every stored value is finite; both are enforced at construction, so
/// downstream code never re-validates.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PixelGrid {
    /// Builds a grid from row-major `values`.
    ///
    /// Fails with [`Error::Domain`] if either dimension is zero, the value
    /// count does not match `rows * cols`, or any value is non-finite.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::Domain(format!(
                "expected {} values for a {rows}x{cols} grid, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("grid contains non-finite value {v}")));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a grid by evaluating `f(row, col)` at every cell.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.saturating_mul(cols));
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::new(rows, cols, values)
    }

    /// An all-zero grid.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows.saturating_mul(cols)])
    }

    /// Internal constructor for values that are finite by construction.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0);
        debug_assert_eq!(values.len(), rows * cols);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total cell count (`rows * cols`, never zero).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Row-major view of all samples.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `(row, col)`.
    ///
    /// # Panics
    /// Panics if either index is out of range.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "pixel index out of range");
        self.values[row * self.cols + col]
    }

    /// One full row of samples.
    pub fn row(&self, row: usize) -> &[f64] {
        assert!(row < self.rows, "row index out of range");
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Smallest sample.
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest sample.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Min-max normalization onto `[0, 1]`.
    ///
    /// A constant grid (max equals min) maps to all zeros rather than
    /// dividing by zero; outputs are exactly `0` at the minimum and exactly
    /// `1` at the maximum otherwise.
    pub fn normalized(&self) -> PixelGrid {
        let lo = self.min_value();
        let hi = self.max_value();
        let span = hi - lo;
        let values = if span == 0.0 {
            vec![0.0; self.values.len()]
        } else {
            self.values.iter().map(|v| (v - lo) / span).collect()
        };
        PixelGrid::from_raw(self.rows, self.cols, values)
    }

    /// Nearest-neighbour resample to `rows x cols`.
    ///
    /// Pixel centres are aligned: destination cell `d` of `n` reads source
    /// cell `floor((d + 0.5) * src / n)`. Resampling to the grid's own shape
    /// returns an identical copy.
    pub fn resample_nearest(&self, rows: usize, cols: usize) -> Result<PixelGrid> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain(format!(
                "resample target must be positive, got {rows}x{cols}"
            )));
        }
        if rows == self.rows && cols == self.cols {
            return Ok(self.clone());
        }
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let sr = nearest_index(r, rows, self.rows);
            for c in 0..cols {
                let sc = nearest_index(c, cols, self.cols);
                values.push(self.values[sr * self.cols + sc]);
            }
        }
        Ok(PixelGrid::from_raw(rows, cols, values))
    }

    /// Bilinear resample to `rows x cols` with pixel-centre alignment.
    ///
    /// Resampling to the grid's own shape returns an identical copy; borders
    /// clamp to the outermost samples.
    pub fn resample_bilinear(&self, rows: usize, cols: usize) -> Result<PixelGrid> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain(format!(
                "resample target must be positive, got {rows}x{cols}"
            )));
        }
        if rows == self.rows && cols == self.cols {
            return Ok(self.clone());
        }
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (r0, r1, tr) = linear_coords(r, rows, self.rows);
            for c in 0..cols {
                let (c0, c1, tc) = linear_coords(c, cols, self.cols);
                let top = self.values[r0 * self.cols + c0] * (1.0 - tc)
                    + self.values[r0 * self.cols + c1] * tc;
                let bottom = self.values[r1 * self.cols + c0] * (1.0 - tc)
                    + self.values[r1 * self.cols + c1] * tc;
                values.push(top * (1.0 - tr) + bottom * tr);
            }
        }
        Ok(PixelGrid::from_raw(rows, cols, values))
    }
}

/// Source index for nearest-neighbour resampling with pixel-centre alignment.
fn nearest_index(dst: usize, dst_len: usize, src_len: usize) -> usize {
    let x = (dst as f64 + 0.5) * src_len as f64 / dst_len as f64;
    let idx = Float::floor(x) as usize;
    idx.min(src_len - 1)
}

/// Bracketing source indices and interpolation weight for bilinear sampling.
fn linear_coords(dst: usize, dst_len: usize, src_len: usize) -> (usize, usize, f64) {
    let x = (dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5;
    let x = Float::max(Float::min(x, (src_len - 1) as f64), 0.0);
    let i0 = Float::floor(x) as usize;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, x - i0 as f64)
}
