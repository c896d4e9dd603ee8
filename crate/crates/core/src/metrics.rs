//! Evaluation metrics for rasters and point clouds.
//!
//! Eight metrics, two families:
//!
//! * raster-vs-raster — [`mae`], [`rel`], [`mse`], [`pearson`],
//!   [`mutual_information`], [`ssim`];
//! * cloud-vs-cloud — unidirectional ([`ucd`]) and bidirectional ([`bcd`])
//!   Chamfer distance.
//!
//! Every function validates shapes up front ([`Error::Domain`]) and reports
//! inputs on which the quantity is mathematically undefined — constant grids
//! under Pearson, empty clouds under Chamfer — as [`Error::Degenerate`]
//! rather than inventing a number. Batch callers are expected to map
//! degenerate cells to NaN in their own output.
//!
//! Chamfer distances switch from the exact brute-force scan to a k-d tree
//! once the target cloud outgrows [`BRUTE_FORCE_MAX`] points; both paths
//! minimize the identical squared distance, so they agree to the last bit
//! and the cutover is purely a speed decision.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;

use num_traits::Float;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::raster::PixelGrid;

/// Largest target cloud the Chamfer scan searches exhaustively; bigger
/// clouds go through the k-d tree.
pub const BRUTE_FORCE_MAX: usize = 512;

/// SSIM stabilizers for inputs in `[0, 1]`: `(0.01)^2` and `(0.03)^2`.
const SSIM_C1: f64 = 0.0001;
const SSIM_C2: f64 = 0.0009;

/// Side length of the square SSIM window.
const SSIM_WINDOW: usize = 8;

/// One row of an evaluation table: the eight metrics for a single
/// prediction/ground-truth pair. Degenerate metrics are stored as NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    pub rel: f64,
    pub ucd: f64,
    pub bcd: f64,
    pub pearson: f64,
    pub mutual_info: f64,
    pub mse: f64,
    pub ssim: f64,
}

// ── Raster metrics ──────────────────────────────────────────────────────────

fn require_same_shape(a: &PixelGrid, b: &PixelGrid) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Domain(format!(
            "grid shapes differ: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Mean absolute error between two equally shaped grids.
pub fn mae(pred: &PixelGrid, gt: &PixelGrid) -> Result<f64> {
    require_same_shape(pred, gt)?;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(gt.values())
        .map(|(p, g)| Float::abs(p - g))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean squared error between two equally shaped grids.
pub fn mse(pred: &PixelGrid, gt: &PixelGrid) -> Result<f64> {
    require_same_shape(pred, gt)?;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(gt.values())
        .map(|(p, g)| (p - g) * (p - g))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean absolute *relative* error, `|pred - gt| / gt`, averaged over the
/// cells where `gt > eps`.
///
/// Cells at or below `eps` carry no usable reference value and are skipped;
/// if that leaves nothing, the metric is undefined ([`Error::Degenerate`]).
/// `eps` must be positive and finite.
pub fn rel(pred: &PixelGrid, gt: &PixelGrid, eps: f64) -> Result<f64> {
    require_same_shape(pred, gt)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be positive and finite, got {eps}")));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, g) in pred.values().iter().zip(gt.values()) {
        if *g > eps {
            sum += Float::abs(p - g) / g;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate(
            "no ground-truth cell exceeds eps; relative error is undefined".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// Pearson correlation coefficient of two equally shaped grids.
///
/// Undefined ([`Error::Degenerate`]) if either grid is constant — zero
/// variance leaves nothing to correlate. The result is clamped into
/// `[-1, 1]` against rounding spill.
pub fn pearson(a: &PixelGrid, b: &PixelGrid) -> Result<f64> {
    require_same_shape(a, b)?;
    let n = a.len() as f64;
    let mean_a: f64 = a.values().iter().sum::<f64>() / n;
    let mean_b: f64 = b.values().iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        let da = x - mean_a;
        let db = y - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate(
            "constant grid has zero variance; correlation is undefined".into(),
        ));
    }
    Ok(Float::max(Float::min(sab / Float::sqrt(saa * sbb), 1.0), -1.0))
}

/// Mutual information (in nats) between two equally shaped grids.
///
/// Both grids are min-max normalized, quantized into `bins` equal-width
/// bins over `[0, 1]`, and compared through their `bins x bins` joint
/// histogram. Requires `bins >= 2`. The result is clamped to be
/// non-negative; a constant grid yields exactly `0`.
pub fn mutual_information(a: &PixelGrid, b: &PixelGrid, bins: usize) -> Result<f64> {
    require_same_shape(a, b)?;
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    let na = a.normalized();
    let nb = b.normalized();
    let bin_of = |v: f64| -> usize {
        let idx = Float::floor(v * bins as f64) as usize;
        idx.min(bins - 1)
    };

    let mut joint = vec![0u64; bins * bins];
    for (x, y) in na.values().iter().zip(nb.values()) {
        joint[bin_of(*x) * bins + bin_of(*y)] += 1;
    }
    let mut row = vec![0u64; bins];
    let mut col = vec![0u64; bins];
    for i in 0..bins {
        for j in 0..bins {
            row[i] += joint[i * bins + j];
            col[j] += joint[i * bins + j];
        }
    }

    let total = a.len() as f64;
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let p = c as f64 / total;
            mi += p * Float::ln(c as f64 * total / (row[i] as f64 * col[j] as f64));
        }
    }
    Ok(Float::max(mi, 0.0))
}

/// Structural similarity of two grids with values in `[0, 1]`.
///
/// Classic windowed SSIM: all `8x8` windows at stride 1, population
/// moments, stabilizers `C1 = 0.01^2`, `C2 = 0.03^2`, averaged over
/// windows. Both grids must share a shape of at least `8x8` and stay inside
/// the unit range ([`Error::Domain`] otherwise). Identical grids score
/// exactly `1`.
pub fn ssim(a: &PixelGrid, b: &PixelGrid) -> Result<f64> {
    require_same_shape(a, b)?;
    if a.rows() < SSIM_WINDOW || a.cols() < SSIM_WINDOW {
        return Err(Error::Domain(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} grids, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    for (name, g) in [("first", a), ("second", b)] {
        if g.values().iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::Domain(format!(
                "ssim expects {name} grid normalized to [0, 1]"
            )));
        }
    }

    let inv_n = 1.0 / (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut acc = 0.0;
    let mut windows = 0usize;
    for wr in 0..=(a.rows() - SSIM_WINDOW) {
        for wc in 0..=(a.cols() - SSIM_WINDOW) {
            let (mut ma, mut mb) = (0.0, 0.0);
            for r in wr..wr + SSIM_WINDOW {
                for c in wc..wc + SSIM_WINDOW {
                    ma += a.get(r, c);
                    mb += b.get(r, c);
                }
            }
            ma *= inv_n;
            mb *= inv_n;
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for r in wr..wr + SSIM_WINDOW {
                for c in wc..wc + SSIM_WINDOW {
                    let da = a.get(r, c) - ma;
                    let db = b.get(r, c) - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            va *= inv_n;
            vb *= inv_n;
            cov *= inv_n;
            acc += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            windows += 1;
        }
    }
    Ok(acc / windows as f64)
}

// ── Chamfer distances ───────────────────────────────────────────────────────

fn dist2(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

/// A static 3D k-d tree (median split, cycling axes) for nearest-neighbour
/// queries against clouds too large to scan.
struct KdNode {
    point: [f64; 3],
    axis: usize,
    left: Option<Box<KdNode>>,
    right: Option<Box<KdNode>>,
}

impl KdNode {
    fn build(points: &mut [[f64; 3]], depth: usize) -> Option<Box<KdNode>> {
        if points.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let mid = points.len() / 2;
        // Coordinates are finite by the PointCloud invariant, so the
        // comparator is total.
        points.select_nth_unstable_by(mid, |a, b| a[axis].partial_cmp(&b[axis]).unwrap());
        let point = points[mid];
        let (lo, rest) = points.split_at_mut(mid);
        let hi = &mut rest[1..];
        Some(Box::new(KdNode {
            point,
            axis,
            left: KdNode::build(lo, depth + 1),
            right: KdNode::build(hi, depth + 1),
        }))
    }

    fn nearest2(&self, q: &[f64; 3], best: &mut f64) {
        let d2 = dist2(&self.point, q);
        if d2 < *best {
            *best = d2;
        }
        let delta = q[self.axis] - self.point[self.axis];
        let (first, second) = if delta < 0.0 {
            (&self.left, &self.right)
        } else {
            (&self.right, &self.left)
        };
        if let Some(n) = first {
            n.nearest2(q, best);
        }
        if delta * delta < *best {
            if let Some(n) = second {
                n.nearest2(q, best);
            }
        }
    }
}

/// Smallest squared distance from `q` to any point of `to`, exhaustively.
fn brute_nearest2(q: &[f64; 3], to: &[[f64; 3]]) -> f64 {
    to.iter().map(|p| dist2(q, p)).fold(f64::INFINITY, f64::min)
}

/// Unidirectional Chamfer distance: the mean Euclidean distance from each
/// point of `from` to its nearest neighbour in `to`.
///
/// Undefined ([`Error::Degenerate`]) if either cloud is empty. Targets of
/// more than [`BRUTE_FORCE_MAX`] points are searched through a k-d tree;
/// the answer is identical either way.
pub fn ucd(from: &PointCloud, to: &PointCloud) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::Degenerate(
            "chamfer distance needs two non-empty clouds".into(),
        ));
    }
    let sum: f64 = if to.len() <= BRUTE_FORCE_MAX {
        from.iter()
            .map(|q| Float::sqrt(brute_nearest2(q, to.points())))
            .sum()
    } else {
        let mut pts = to.points().to_vec();
        let tree = KdNode::build(&mut pts, 0).expect("non-empty cloud builds a node");
        from.iter()
            .map(|q| {
                let mut best = f64::INFINITY;
                tree.nearest2(q, &mut best);
                Float::sqrt(best)
            })
            .sum()
    };
    Ok(sum / from.len() as f64)
}

/// Bidirectional Chamfer distance: `ucd(a, b) + ucd(b, a)`.
pub fn bcd(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(ucd(a, b)? + ucd(b, a)?)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, values: &[f64]) -> PixelGrid {
        PixelGrid::new(rows, cols, values.to_vec()).unwrap()
    }

    /// Deterministic pseudo-random stream in [0, 1).
    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn random_grid(rows: usize, cols: usize, seed: u64) -> PixelGrid {
        let mut lcg = Lcg(seed);
        PixelGrid::from_fn(rows, cols, |_, _| lcg.next()).unwrap()
    }

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut lcg = Lcg(seed);
        let pts = (0..n)
            .map(|_| [lcg.next() * 10.0, lcg.next() * 10.0, lcg.next() * 10.0])
            .collect();
        PointCloud::new(pts).unwrap()
    }

    // ---- mae / mse / rel ----

    #[test]
    fn mae_and_mse_match_hand_computation() {
        let p = grid(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let g = grid(2, 2, &[2.0, 2.0, 1.0, 8.0]);
        // |diffs| = 1, 0, 2, 4 ; squares = 1, 0, 4, 16
        assert_eq!(mae(&p, &g).unwrap(), 7.0 / 4.0);
        assert_eq!(mse(&p, &g).unwrap(), 21.0 / 4.0);
        assert_eq!(mae(&p, &p).unwrap(), 0.0);
        assert_eq!(mse(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn raster_metrics_reject_shape_mismatch() {
        let a = grid(2, 2, &[0.0; 4]);
        let b = grid(1, 4, &[0.0; 4]);
        assert!(matches!(mae(&a, &b), Err(Error::Domain(_))));
        assert!(matches!(mse(&a, &b), Err(Error::Domain(_))));
        assert!(matches!(rel(&a, &b, 1e-6), Err(Error::Domain(_))));
        assert!(matches!(pearson(&a, &b), Err(Error::Domain(_))));
        assert!(matches!(mutual_information(&a, &b, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn rel_skips_cells_without_reference_depth() {
        let p = grid(1, 4, &[1.0, 5.0, 2.0, 9.0]);
        let g = grid(1, 4, &[2.0, 4.0, 0.0, 0.0]);
        // Only the first two cells have gt > eps: |1-2|/2 and |5-4|/4.
        let want = (0.5 + 0.25) / 2.0;
        assert!((rel(&p, &g, 1e-6).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn rel_is_degenerate_without_any_reference_and_validates_eps() {
        let p = grid(1, 2, &[1.0, 2.0]);
        let g = grid(1, 2, &[0.0, 0.0]);
        assert!(matches!(rel(&p, &g, 1e-6), Err(Error::Degenerate(_))));
        let g2 = grid(1, 2, &[1.0, 1.0]);
        assert!(matches!(rel(&p, &g2, 0.0), Err(Error::Domain(_))));
        assert!(matches!(rel(&p, &g2, -1.0), Err(Error::Domain(_))));
    }

    // ---- pearson ----

    #[test]
    fn pearson_matches_hand_computation() {
        let a = grid(1, 4, &[1.0, 2.0, 3.0, 4.0]);
        let b = grid(1, 4, &[1.0, 3.0, 2.0, 4.0]);
        // Centered: a = [-1.5,-0.5,0.5,1.5], b = [-1.5,0.5,-0.5,1.5]
        // sum ab = 4, sum a^2 = sum b^2 = 5  ->  r = 0.8
        assert!((pearson(&a, &b).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pearson_is_exactly_one_on_linear_relations() {
        let a = random_grid(6, 7, 11);
        let up = PixelGrid::new(6, 7, a.values().iter().map(|v| 3.0 * v + 1.0).collect()).unwrap();
        let down = PixelGrid::new(6, 7, a.values().iter().map(|v| -2.0 * v + 5.0).collect()).unwrap();
        assert!((pearson(&a, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&a, &down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_affine_invariant() {
        let a = random_grid(9, 9, 5);
        let b = random_grid(9, 9, 6);
        let r = pearson(&a, &b).unwrap();
        let b2 = PixelGrid::new(9, 9, b.values().iter().map(|v| 1.7 * v - 0.4).collect()).unwrap();
        let r2 = pearson(&a, &b2).unwrap();
        assert!((r - r2).abs() < 1e-12, "{r} vs {r2}");
    }

    #[test]
    fn pearson_refuses_constant_grids() {
        let a = random_grid(3, 3, 1);
        let flat = grid(3, 3, &[2.0; 9]);
        assert!(matches!(pearson(&a, &flat), Err(Error::Degenerate(_))));
        assert!(matches!(pearson(&flat, &a), Err(Error::Degenerate(_))));
        assert!(matches!(pearson(&flat, &flat), Err(Error::Degenerate(_))));
    }

    // ---- mutual information ----

    /// Independent marginal entropy in nats, computed straight from the
    /// definition as an oracle for the MI identities.
    fn entropy_oracle(g: &PixelGrid, bins: usize) -> f64 {
        let n = g.normalized();
        let mut counts = vec![0u64; bins];
        for &v in n.values() {
            let idx = ((v * bins as f64).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let total = g.len() as f64;
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.ln()
            })
            .sum()
    }

    #[test]
    fn mi_of_identical_binary_patterns_is_ln2() {
        let a = grid(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let got = mutual_information(&a, &a, 2).unwrap();
        assert!((got - core::f64::consts::LN_2).abs() < 1e-12, "{got}");
    }

    #[test]
    fn mi_of_a_grid_with_itself_is_its_entropy() {
        for seed in [3u64, 17, 91] {
            let g = random_grid(12, 9, seed);
            for bins in [2usize, 8, 32] {
                let mi = mutual_information(&g, &g, bins).unwrap();
                let h = entropy_oracle(&g, bins);
                assert!((mi - h).abs() < 1e-9, "bins={bins}: MI {mi} vs H {h}");
            }
        }
    }

    #[test]
    fn mi_is_symmetric() {
        let a = random_grid(10, 10, 21);
        let b = random_grid(10, 10, 22);
        let ab = mutual_information(&a, &b, 16).unwrap();
        let ba = mutual_information(&b, &a, 16).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn mi_of_independent_halves_is_zero() {
        // a splits left/right, b splits top/bottom: the joint histogram is
        // the exact product of the marginals.
        let a = PixelGrid::from_fn(4, 4, |_, c| if c < 2 { 0.0 } else { 1.0 }).unwrap();
        let b = PixelGrid::from_fn(4, 4, |r, _| if r < 2 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(mutual_information(&a, &b, 2).unwrap(), 0.0);
    }

    #[test]
    fn mi_of_constant_grids_is_zero_and_bins_are_validated() {
        let flat = grid(3, 3, &[4.0; 9]);
        let g = random_grid(3, 3, 2);
        assert_eq!(mutual_information(&flat, &g, 8).unwrap(), 0.0);
        assert_eq!(mutual_information(&flat, &flat, 8).unwrap(), 0.0);
        assert!(matches!(mutual_information(&g, &g, 1), Err(Error::Domain(_))));
        assert!(matches!(mutual_information(&g, &g, 0), Err(Error::Domain(_))));
    }

    // ---- ssim ----

    #[test]
    fn ssim_of_identical_grids_is_exactly_one() {
        let g = random_grid(12, 10, 33);
        assert_eq!(ssim(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn ssim_of_inverted_checkerboard_is_strongly_negative() {
        let a = PixelGrid::from_fn(8, 8, |r, c| ((r + c) % 2) as f64).unwrap();
        let b = PixelGrid::from_fn(8, 8, |r, c| ((r + c + 1) % 2) as f64).unwrap();
        let s = ssim(&a, &b).unwrap();
        assert!(s < -0.99, "{s}");
    }

    #[test]
    fn ssim_of_distinct_constants_follows_the_closed_form() {
        let a = grid(8, 8, &[0.3; 64]);
        let b = grid(8, 8, &[0.7; 64]);
        // Zero variance everywhere: s = (2*mu_a*mu_b + C1) / (mu_a^2 + mu_b^2 + C1).
        let want = (2.0 * 0.3 * 0.7 + SSIM_C1) / (0.3 * 0.3 + 0.7 * 0.7 + SSIM_C1);
        let got = ssim(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn ssim_is_symmetric_and_degrades_under_noise() {
        let a = random_grid(16, 16, 8);
        let mut lcg = Lcg(99);
        let noisy = PixelGrid::new(
            16,
            16,
            a.values().iter().map(|v| (v + 0.3 * (lcg.next() - 0.5)).clamp(0.0, 1.0)).collect(),
        )
        .unwrap();
        let s1 = ssim(&a, &noisy).unwrap();
        let s2 = ssim(&noisy, &a).unwrap();
        assert_eq!(s1, s2);
        assert!(s1 < 1.0);
        assert!(s1 > -1.0);
    }

    #[test]
    fn ssim_validates_shape_and_range() {
        let small = grid(7, 8, &[0.0; 56]);
        assert!(matches!(ssim(&small, &small), Err(Error::Domain(_))));
        let a = random_grid(8, 8, 1);
        let out_of_range = grid(8, 8, &[1.5; 64]);
        assert!(matches!(ssim(&a, &out_of_range), Err(Error::Domain(_))));
        let negative = grid(8, 8, &[-0.5; 64]);
        assert!(matches!(ssim(&negative, &a), Err(Error::Domain(_))));
    }

    // ---- chamfer ----

    #[test]
    fn chamfer_matches_hand_computation() {
        let from = PointCloud::new(vec![[0.0, 0.0, 0.0]]).unwrap();
        let to = PointCloud::new(vec![[1.0, 0.0, 0.0], [5.0, 0.0, 0.0]]).unwrap();
        assert_eq!(ucd(&from, &to).unwrap(), 1.0);
        assert_eq!(ucd(&to, &from).unwrap(), 3.0); // (1 + 5) / 2
        assert_eq!(bcd(&from, &to).unwrap(), 4.0);
    }

    #[test]
    fn chamfer_of_identical_clouds_is_zero() {
        let c = random_cloud(40, 7);
        assert_eq!(ucd(&c, &c).unwrap(), 0.0);
        assert_eq!(bcd(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn chamfer_is_degenerate_on_empty_clouds() {
        let c = random_cloud(5, 1);
        let e = PointCloud::empty();
        assert!(matches!(ucd(&c, &e), Err(Error::Degenerate(_))));
        assert!(matches!(ucd(&e, &c), Err(Error::Degenerate(_))));
        assert!(matches!(bcd(&e, &e), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bcd_is_symmetric() {
        let a = random_cloud(30, 4);
        let b = random_cloud(50, 9);
        assert_eq!(bcd(&a, &b).unwrap(), bcd(&b, &a).unwrap());
    }

    #[test]
    fn kd_tree_path_agrees_with_brute_force() {
        // 600 and 700 points put both directions on the tree path; the
        // reference below is the straightforward quadratic scan.
        let a = random_cloud(600, 100);
        let b = random_cloud(700, 200);
        let brute = |from: &PointCloud, to: &PointCloud| {
            from.iter()
                .map(|q| brute_nearest2(q, to.points()).sqrt())
                .sum::<f64>()
                / from.len() as f64
        };
        let fast_ab = ucd(&a, &b).unwrap();
        let fast_ba = ucd(&b, &a).unwrap();
        assert!((fast_ab - brute(&a, &b)).abs() <= 1e-12, "{fast_ab}");
        assert!((fast_ba - brute(&b, &a)).abs() <= 1e-12, "{fast_ba}");
        assert!(b.len() > BRUTE_FORCE_MAX && a.len() > BRUTE_FORCE_MAX);
    }

    #[test]
    fn kd_tree_handles_duplicate_and_collinear_points() {
        let mut pts = vec![[1.0, 1.0, 1.0]; 400];
        pts.extend((0..300).map(|i| [i as f64, 0.0, 0.0]));
        let to = PointCloud::new(pts).unwrap();
        let from = PointCloud::new(vec![[1.0, 1.0, 1.0], [250.5, 0.0, 0.0]]).unwrap();
        let d = ucd(&from, &to).unwrap();
        assert!((d - 0.25).abs() < 1e-12); // (0 + 0.5) / 2
    }
}
