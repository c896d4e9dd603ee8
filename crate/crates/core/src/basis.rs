//! Steering segment bases, their covariance, and periodograms.
//!
//! A basis is built from `M` *steering segments* evaluated over a scan-angle
//! grid: segment `m` at angle `phi` is
//!
//! ```text
//! x(m, phi) = exp(-j * pi * m * sin(phi)),    m = 0, 1, ..., M-1
//! ```
//!
//! a non-linear phase progression in the angle (linear in `sin(phi)`), the
//! same family a uniform half-wavelength array produces. Stacking the
//! segments row-wise gives `X` (`M x L` for an `L`-point grid), and the
//! segment covariance
//!
//! ```text
//! C = (1/M) * X^H * X        (L x L, Hermitian, unit diagonal)
//! ```
//!
//! collects every pairwise cross-periodogram: row `i` of `C` is the response
//! of direction `phi_i` against the whole grid, and `|C(i, l)|` traces the
//! Dirichlet kernel `|sin(M*d/2) / (M * sin(d/2))|` with
//! `d = pi * (sin(phi_i) - sin(phi_l))`. Growing `M` therefore narrows the
//! main lobe — the resolution knob everything downstream turns on.
//!
//! Two bases over independent azimuth/elevation grids combine into a rank-1
//! joint 2D periodogram (see [`joint_periodogram`]); the classic
//! segment-averaged 1D estimator over snapshot data is provided as
//! [`classic_bartlett_1d`] and doubles as a cross-check of the segment
//! conventions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::angle::AngleGrid;
use crate::error::{Error, Result};

// ── Complex matrices ────────────────────────────────────────────────────────

/// A dense row-major complex matrix.
///
/// Deliberately minimal: this crate only needs construction, indexing and
/// row views. Empty shapes are representable so callers can be validated
/// where it matters (see [`classic_bartlett_1d`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// An all-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    /// Builds a matrix by evaluating `f(row, col)` at every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(row, col)`.
    ///
    /// # Panics
    /// Panics if either index is out of range.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        assert!(row < self.rows && col < self.cols, "matrix index out of range");
        self.data[row * self.cols + col]
    }

    /// One full row.
    pub fn row(&self, row: usize) -> &[Complex64] {
        assert!(row < self.rows, "row index out of range");
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Row-major view of all entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.cols + col] = v;
    }
}

// ── Steering segment basis ──────────────────────────────────────────────────

/// `M` steering segments over a scan grid, plus their covariance.
///
/// Construction is the expensive part (`O(L^2 * M)` for the covariance), so
/// a built basis is meant to be reused across every image encoded with the
/// same `(M, grid)` pair.
#[derive(Debug, Clone)]
pub struct BasisSet {
    m_segments: usize,
    grid: AngleGrid,
    segments: ComplexMatrix,
    covariance: ComplexMatrix,
}

impl BasisSet {
    /// Builds the segment matrix and its covariance for `m_segments`
    /// segments over `grid`.
    ///
    /// Fails with [`Error::Domain`] if `m_segments` is zero.
    pub fn new(m_segments: usize, grid: &AngleGrid) -> Result<Self> {
        if m_segments == 0 {
            return Err(Error::Domain("m_segments must be at least 1".into()));
        }
        let l = grid.count();
        let sines: Vec<f64> = grid.angles().iter().map(|&a| Float::sin(a)).collect();

        let segments = ComplexMatrix::from_fn(m_segments, l, |m, i| {
            Complex64::cis(-core::f64::consts::PI * m as f64 * sines[i])
        });

        // C = (1/M) X^H X, filled on the upper triangle and mirrored so the
        // result is Hermitian to the last bit.
        let mut covariance = ComplexMatrix::zeros(l, l);
        let inv_m = 1.0 / m_segments as f64;
        for i in 0..l {
            for j in i..l {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..m_segments {
                    acc += segments.get(m, i).conj() * segments.get(m, j);
                }
                let c = acc * inv_m;
                covariance.set(i, j, c);
                if i != j {
                    covariance.set(j, i, c.conj());
                }
            }
        }

        Ok(Self { m_segments, grid: grid.clone(), segments, covariance })
    }

    pub fn m_segments(&self) -> usize {
        self.m_segments
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    /// The raw `M x L` segment matrix.
    pub fn segments(&self) -> &ComplexMatrix {
        &self.segments
    }

    /// The `L x L` segment covariance.
    pub fn covariance(&self) -> &ComplexMatrix {
        &self.covariance
    }

    /// Cross-periodogram of grid direction `i` against the whole grid
    /// (row `i` of the covariance).
    ///
    /// Fails with [`Error::Index`] if `i` is not a grid index.
    pub fn periodogram_row(&self, i: usize) -> Result<&[Complex64]> {
        if i >= self.grid.count() {
            return Err(Error::Index { index: i, len: self.grid.count() });
        }
        Ok(self.covariance.row(i))
    }
}

// ── Joint 2D periodogram ────────────────────────────────────────────────────

/// The rank-1 joint periodogram of one azimuth/elevation direction pair.
///
/// `matrix` has `theta.count()` rows and `phi.count()` columns: entry
/// `(a, b)` couples elevation grid direction `a` with azimuth grid
/// direction `b`.
#[derive(Debug, Clone)]
pub struct JointPeriodogram {
    n_index: usize,
    k_index: usize,
    matrix: ComplexMatrix,
}

impl JointPeriodogram {
    /// Azimuth grid index this periodogram was steered to.
    pub fn n_index(&self) -> usize {
        self.n_index
    }

    /// Elevation grid index this periodogram was steered to.
    pub fn k_index(&self) -> usize {
        self.k_index
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Outer product of the elevation periodogram row `k` and the azimuth
/// periodogram row `n`:
///
/// ```text
/// Y(a, b) = y_theta(k)[a] * y_phi(n)[b]
/// ```
///
/// The result is rank 1 by construction. Fails with [`Error::Domain`] if the
/// two bases were built with different segment counts, and [`Error::Index`]
/// if `n`/`k` is outside its grid.
pub fn joint_periodogram(
    basis_phi: &BasisSet,
    basis_theta: &BasisSet,
    n: usize,
    k: usize,
) -> Result<JointPeriodogram> {
    if basis_phi.m_segments() != basis_theta.m_segments() {
        return Err(Error::Domain(format!(
            "bases disagree on segment count: {} vs {}",
            basis_phi.m_segments(),
            basis_theta.m_segments()
        )));
    }
    let y_phi = basis_phi.periodogram_row(n)?;
    let y_theta = basis_theta.periodogram_row(k)?;
    let matrix = ComplexMatrix::from_fn(y_theta.len(), y_phi.len(), |a, b| y_theta[a] * y_phi[b]);
    Ok(JointPeriodogram { n_index: n, k_index: k, matrix })
}

// ── Classic segment-averaged 1D estimator ───────────────────────────────────

/// Segment-averaged (Bartlett) spatial power spectrum of snapshot data.
///
/// `signal` holds one segment per row and one snapshot per column
/// (`M x N_samples`). The estimator forms the sample covariance
/// `R(p, q) = (1/N) * sum_n conj(x_p(n)) * x_q(n)` and scans it with the
/// steering family `a(phi)[m] = exp(-j * pi * m * sin(phi))`:
///
/// ```text
/// P(phi) = a(phi)^H R a(phi)
/// ```
///
/// Note the convention this implies: under `R = (1/N) S^H S` a far-field
/// source whose segment phases advance as `exp(+j * pi * m * sin(phi0))`
/// peaks at scan angle `phi0` (the conjugate progression peaks at the
/// mirrored angle). The output is real and non-negative; values that round
/// off slightly below zero are clamped to `0.0`.
///
/// Fails with [`Error::Domain`] on an empty signal matrix.
pub fn classic_bartlett_1d(signal: &ComplexMatrix, scan: &AngleGrid) -> Result<Vec<f64>> {
    let m = signal.rows();
    let n = signal.cols();
    if m == 0 || n == 0 {
        return Err(Error::Domain(format!(
            "signal matrix must be non-empty, got {m}x{n}"
        )));
    }

    // Sample covariance over snapshots, Hermitian by mirrored construction.
    let inv_n = 1.0 / n as f64;
    let mut cov = ComplexMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..n {
                acc += signal.get(p, s).conj() * signal.get(q, s);
            }
            let c = acc * inv_n;
            cov.set(p, q, c);
            if p != q {
                cov.set(q, p, c.conj());
            }
        }
    }

    let mut out = Vec::with_capacity(scan.count());
    for &angle in scan.angles() {
        let phase = core::f64::consts::PI * Float::sin(angle);
        let steer: Vec<Complex64> = (0..m).map(|seg| Complex64::cis(-phase * seg as f64)).collect();
        // a^H R a, evaluated as a^H (R a).
        let mut power = Complex64::new(0.0, 0.0);
        for p in 0..m {
            let mut row_dot = Complex64::new(0.0, 0.0);
            for q in 0..m {
                row_dot += cov.get(p, q) * steer[q];
            }
            power += steer[p].conj() * row_dot;
        }
        out.push(Float::max(power.re, 0.0));
    }
    Ok(out)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    /// Closed-form magnitude of the segment covariance: the Dirichlet kernel
    /// in the sine-angle difference.
    fn dirichlet_magnitude(m: usize, sin_i: f64, sin_l: f64) -> f64 {
        let d = PI * (sin_i - sin_l);
        if d.abs() < 1e-15 {
            return 1.0;
        }
        (f64::sin(m as f64 * d / 2.0) / (m as f64 * f64::sin(d / 2.0))).abs()
    }

    /// Snapshots of a single far-field source at `angle` under the
    /// convention documented on [`classic_bartlett_1d`]: segment `m` carries
    /// the phase advance `exp(+j * pi * m * sin(angle))`.
    fn steered_source(m_segments: usize, n_samples: usize, angle_rad: f64) -> ComplexMatrix {
        let omega = 0.73; // arbitrary temporal frequency, irrelevant to the scan
        ComplexMatrix::from_fn(m_segments, n_samples, |m, n| {
            Complex64::cis(-omega * n as f64) * Complex64::cis(PI * m as f64 * f64::sin(angle_rad))
        })
    }

    #[test]
    fn segments_have_unit_magnitude_and_expected_progression() {
        let grid = AngleGrid::new(-60.0, 60.0, 13).unwrap();
        let basis = BasisSet::new(5, &grid).unwrap();
        let x = basis.segments();
        assert_eq!(x.rows(), 5);
        assert_eq!(x.cols(), 13);
        for i in 0..13 {
            // Segment 0 is the all-ones row.
            assert!((x.get(0, i) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            // Consecutive segments advance by exp(-j * pi * sin(angle)).
            let expect_step = Complex64::cis(-PI * f64::sin(grid.angles()[i]));
            for m in 0..4 {
                let step = x.get(m + 1, i) / x.get(m, i);
                assert!((step - expect_step).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_is_hermitian_with_unit_diagonal() {
        let grid = AngleGrid::new(-70.0, 70.0, 21).unwrap();
        let basis = BasisSet::new(8, &grid).unwrap();
        let c = basis.covariance();
        for i in 0..21 {
            assert!((c.get(i, i).re - 1.0).abs() < 1e-12);
            assert!(c.get(i, i).im.abs() < 1e-12);
            for l in 0..21 {
                let a = c.get(i, l);
                let b = c.get(l, i).conj();
                assert_eq!(a, b, "covariance not exactly Hermitian at ({i}, {l})");
            }
        }
    }

    #[test]
    fn covariance_magnitude_matches_dirichlet_kernel() {
        let grid = AngleGrid::new(-70.0, 70.0, 33).unwrap();
        for m in [1usize, 3, 10, 40] {
            let basis = BasisSet::new(m, &grid).unwrap();
            let c = basis.covariance();
            for i in 0..33 {
                for l in 0..33 {
                    let got = c.get(i, l).norm();
                    let want = dirichlet_magnitude(
                        m,
                        f64::sin(grid.angles()[i]),
                        f64::sin(grid.angles()[l]),
                    );
                    assert!(
                        (got - want).abs() < 1e-10,
                        "M={m} ({i},{l}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn larger_m_concentrates_the_kernel() {
        // The half-power width of |C(row, .)| must shrink as M grows.
        let grid = AngleGrid::new(-70.0, 70.0, 141).unwrap();
        let width = |m: usize| {
            let basis = BasisSet::new(m, &grid).unwrap();
            let row = basis.periodogram_row(70).unwrap();
            row.iter().filter(|z| z.norm() >= 0.5).count()
        };
        let (w10, w20, w70, w200) = (width(10), width(20), width(70), width(200));
        assert!(w10 >= w20 && w20 >= w70 && w70 >= w200, "{w10} {w20} {w70} {w200}");
        assert!(w200 < w10);
    }

    #[test]
    fn periodogram_row_checks_bounds() {
        let grid = AngleGrid::new(-30.0, 30.0, 7).unwrap();
        let basis = BasisSet::new(4, &grid).unwrap();
        assert_eq!(basis.periodogram_row(6).unwrap().len(), 7);
        assert!(matches!(
            basis.periodogram_row(7),
            Err(Error::Index { index: 7, len: 7 })
        ));
    }

    #[test]
    fn joint_periodogram_is_the_outer_product_and_rank_one() {
        let phi = AngleGrid::new(-50.0, 50.0, 9).unwrap();
        let theta = AngleGrid::new(-40.0, 40.0, 6).unwrap();
        let b_phi = BasisSet::new(6, &phi).unwrap();
        let b_theta = BasisSet::new(6, &theta).unwrap();
        let joint = joint_periodogram(&b_phi, &b_theta, 3, 2).unwrap();

        let y = joint.matrix();
        assert_eq!(y.rows(), 6); // theta count
        assert_eq!(y.cols(), 9); // phi count
        let row_phi = b_phi.periodogram_row(3).unwrap();
        let row_theta = b_theta.periodogram_row(2).unwrap();
        for a in 0..6 {
            for b in 0..9 {
                assert!((y.get(a, b) - row_theta[a] * row_phi[b]).norm() < 1e-15);
            }
        }
        // Every 2x2 minor of a rank-1 matrix vanishes.
        for a in 0..5 {
            for b in 0..8 {
                let minor = y.get(a, b) * y.get(a + 1, b + 1) - y.get(a, b + 1) * y.get(a + 1, b);
                assert!(minor.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_periodogram_validates_indices_and_segment_counts() {
        let phi = AngleGrid::new(-50.0, 50.0, 9).unwrap();
        let theta = AngleGrid::new(-40.0, 40.0, 6).unwrap();
        let b_phi = BasisSet::new(6, &phi).unwrap();
        let b_theta = BasisSet::new(6, &theta).unwrap();
        assert!(matches!(
            joint_periodogram(&b_phi, &b_theta, 9, 0),
            Err(Error::Index { index: 9, len: 9 })
        ));
        assert!(matches!(
            joint_periodogram(&b_phi, &b_theta, 0, 6),
            Err(Error::Index { index: 6, len: 6 })
        ));
        let b_theta_other = BasisSet::new(7, &theta).unwrap();
        assert!(matches!(
            joint_periodogram(&b_phi, &b_theta_other, 0, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bartlett_rejects_empty_signals() {
        let scan = AngleGrid::new(-70.0, 70.0, 5).unwrap();
        let empty = ComplexMatrix::zeros(0, 4);
        assert!(matches!(classic_bartlett_1d(&empty, &scan), Err(Error::Domain(_))));
        let empty = ComplexMatrix::zeros(4, 0);
        assert!(matches!(classic_bartlett_1d(&empty, &scan), Err(Error::Domain(_))));
    }

    #[test]
    fn bartlett_of_zero_signal_is_zero() {
        let scan = AngleGrid::new(-70.0, 70.0, 15).unwrap();
        let signal = ComplexMatrix::zeros(8, 16);
        let p = classic_bartlett_1d(&signal, &scan).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bartlett_peaks_at_broadside_for_a_flat_source() {
        let scan = AngleGrid::new(-70.0, 70.0, 141).unwrap();
        let signal = steered_source(16, 32, 0.0);
        let p = classic_bartlett_1d(&signal, &scan).unwrap();
        let argmax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 70);
        // Peak power of a unit source through M segments is M^2.
        assert!((p[70] - 256.0).abs() < 1e-9);
    }

    #[test]
    fn bartlett_recovers_an_off_axis_source() {
        let scan = AngleGrid::new(-70.0, 70.0, 141).unwrap();
        let target = 20.0f64.to_radians();
        let signal = steered_source(16, 40, target);
        let p = classic_bartlett_1d(&signal, &scan).unwrap();
        let argmax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        // 1-degree grid: index 90 is exactly +20 degrees.
        assert!((argmax as i64 - 90).unsigned_abs() <= 1, "argmax {argmax}");
        assert!(p.iter().all(|&v| v >= 0.0));
    }
}
