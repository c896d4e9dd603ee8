//! Evaluation: turn predicted spectra back into depth maps and point
//! clouds, compare them against ground truth, and report one metric row
//! per frame plus mean / standard-deviation aggregate rows.
//!
//! Predictions are the `<frame_id>.radar.csv` spectra an encode run put in
//! the prediction directory (optionally passed through a trained enhancer
//! first). Only frames carrying ground truth participate; missing
//! prediction files for those frames abort the run before any metric is
//! computed.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spatspec_core::geometry::{
    depth_map_to_point_cloud, project_to_depth_map, spectrum_to_point_cloud,
};
use spatspec_core::learner::EnhancerModel;
use spatspec_core::metrics::{bcd, mae, mse, mutual_information, pearson, rel, ssim, ucd};
use spatspec_core::{CameraModel, Error as CoreError, PixelGrid, PointCloud, Spectrum};

use crate::config::ResolvedConfig;
use crate::encode::{load_radar_raster, worker_pool, BatchOptions};
use crate::error::{PipelineError, Result};
use crate::formats::{atomic_write, fmt_f64, read_cloud_csv, read_grid};
use crate::manifest::{FrameEntry, Manifest};

/// Metric column order of the report CSV (after the leading frame id).
pub const METRIC_COLUMNS: [&str; 8] =
    ["mae", "rel", "ucd", "bcd", "pearson", "mutual_info", "mse", "ssim"];

/// Ground-truth cells at or below this carry no depth and are skipped by
/// the relative-error metric.
pub const REL_EPS: f64 = 1e-9;

#[derive(Debug)]
pub struct EvalOutcome {
    pub csv_path: PathBuf,
    /// Frames evaluated (those with ground truth).
    pub frames: usize,
}

/// Samples the radar raster into a depth-hint grid matching an `N x K`
/// spectrum: spectrum rows scan phi (image columns), spectrum columns scan
/// theta (image rows), so cell `(n, k)` reads the pixel at
/// `row = floor((k + 0.5) * H / K)`, `col = floor((n + 0.5) * W / N)` and
/// converts its inverse depth back to a range in meters (empty pixels
/// yield 0, which no camera depth window contains).
pub fn hint_grid(
    raster: &PixelGrid,
    camera: &CameraModel,
    n_phi: usize,
    k_theta: usize,
) -> PixelGrid {
    let h = raster.rows();
    let w = raster.cols();
    PixelGrid::from_fn(n_phi, k_theta, |n, k| {
        let row = (((k as f64 + 0.5) * h as f64 / k_theta as f64) as usize).min(h - 1);
        let col = (((n as f64 + 0.5) * w as f64 / n_phi as f64) as usize).min(w - 1);
        let v = raster.get(row, col);
        if v > 0.0 {
            camera.depth_min() / v
        } else {
            0.0
        }
    })
    .expect("spectrum dimensions are positive")
}

/// One frame's metric row. Degenerate metrics (constant grids, empty
/// clouds) become NaN cells; structural errors propagate.
pub fn metric_row(
    pred_depth: &PixelGrid,
    gt_depth: &PixelGrid,
    pred_cloud: &PointCloud,
    gt_cloud: &PointCloud,
    bins: usize,
) -> spatspec_core::Result<[f64; 8]> {
    let soften = |r: spatspec_core::Result<f64>| match r {
        Ok(v) => Ok(v),
        Err(CoreError::Degenerate(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    };
    Ok([
        mae(pred_depth, gt_depth)?,
        soften(rel(pred_depth, gt_depth, REL_EPS))?,
        soften(ucd(pred_cloud, gt_cloud))?,
        soften(bcd(pred_cloud, gt_cloud))?,
        soften(pearson(pred_depth, gt_depth))?,
        soften(mutual_information(pred_depth, gt_depth, bins))?,
        mse(pred_depth, gt_depth)?,
        // Inverse-depth rasters live in [0, 1] by construction, which is
        // exactly the domain the structural-similarity index expects.
        soften(ssim(pred_depth, gt_depth))?,
    ])
}

/// Loads the frame's ground truth as a (depth map, point cloud) pair,
/// deriving whichever half is absent from the other.
fn ground_truth(
    frame: &FrameEntry,
    camera: &CameraModel,
) -> Result<(PixelGrid, PointCloud)> {
    let cloud = match &frame.gt_cloud {
        Some(path) => Some(read_cloud_csv(path)?),
        None => None,
    };
    let depth = match &frame.gt_depth {
        Some(path) => {
            let grid = read_grid(path)?;
            if grid.rows() != camera.height() || grid.cols() != camera.width() {
                return Err(PipelineError::Parse {
                    path: path.clone(),
                    line: 0,
                    msg: format!(
                        "ground-truth depth map is {}x{} but the camera image is {}x{}",
                        grid.rows(),
                        grid.cols(),
                        camera.height(),
                        camera.width()
                    ),
                });
            }
            Some(grid)
        }
        None => None,
    };
    match (depth, cloud) {
        (Some(d), Some(c)) => Ok((d, c)),
        (Some(d), None) => {
            let c = depth_map_to_point_cloud(&d, camera)?;
            Ok((d, c))
        }
        (None, Some(c)) => {
            let d = project_to_depth_map(&c, camera);
            Ok((d, c))
        }
        (None, None) => unreachable!("caller filters to frames with ground truth"),
    }
}

fn eval_frame(
    frame: &FrameEntry,
    manifest: &Manifest,
    cfg: &ResolvedConfig,
    model: Option<&EnhancerModel>,
    pred_path: &Path,
) -> Result<[f64; 8]> {
    let grid = read_grid(pred_path)?;
    let spectrum = Spectrum::new(
        grid,
        cfg.encoding.m_radar(),
        cfg.encoding.phi().clone(),
        cfg.encoding.theta().clone(),
    )?;
    let spectrum = match model {
        // The enhancer is trained on min-max normalized spectra, so it
        // sees the same scale here.
        Some(m) => m.forward(&spectrum.normalized())?,
        None => spectrum,
    };

    let raster = load_radar_raster(frame, &manifest.camera)?;
    let hints = hint_grid(
        &raster,
        &manifest.camera,
        spectrum.grid().rows(),
        spectrum.grid().cols(),
    );
    let pred_cloud = spectrum_to_point_cloud(&spectrum, &hints, &manifest.camera, cfg.threshold)?;
    let pred_depth = project_to_depth_map(&pred_cloud, &manifest.camera);
    let (gt_depth, gt_cloud) = ground_truth(frame, &manifest.camera)?;
    Ok(metric_row(&pred_depth, &gt_depth, &pred_cloud, &gt_cloud, cfg.bins)?)
}

/// Column-wise mean and population standard deviation, ignoring NaN cells.
/// Columns with no finite value aggregate to NaN.
pub fn aggregate(rows: &[[f64; 8]]) -> ([f64; 8], [f64; 8]) {
    let mut mean = [f64::NAN; 8];
    let mut std = [f64::NAN; 8];
    for col in 0..8 {
        let finite: Vec<f64> =
            rows.iter().map(|r| r[col]).filter(|v| !v.is_nan()).collect();
        if finite.is_empty() {
            continue;
        }
        let n = finite.len() as f64;
        let m = finite.iter().sum::<f64>() / n;
        let var = finite.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean[col] = m;
        std[col] = var.sqrt();
    }
    (mean, std)
}

/// Evaluates every ground-truth frame against its prediction and writes
/// the metric report to `out_path`.
pub fn run_eval(
    manifest: &Manifest,
    cfg: &ResolvedConfig,
    pred_dir: &Path,
    model: Option<&EnhancerModel>,
    out_path: &Path,
    opts: &BatchOptions,
) -> Result<EvalOutcome> {
    let frames: Vec<&FrameEntry> =
        manifest.frames.iter().filter(|f| f.has_ground_truth()).collect();
    if frames.is_empty() {
        return Err(
            CoreError::Domain("no manifest frame carries ground truth to evaluate".into()).into()
        );
    }
    // Fail before any work if predictions are incomplete, listing every
    // missing frame at once.
    let pred_paths: Vec<PathBuf> =
        frames.iter().map(|f| pred_dir.join(format!("{}.radar.csv", f.id))).collect();
    let missing: Vec<String> = frames
        .iter()
        .zip(&pred_paths)
        .filter(|(_, p)| !p.is_file())
        .map(|(f, _)| f.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingPredictions(missing));
    }

    let pool = worker_pool(opts.workers)?;
    let results: Vec<Result<[f64; 8]>> = pool.install(|| {
        frames
            .par_iter()
            .zip(&pred_paths)
            .map(|(frame, pred)| eval_frame(frame, manifest, cfg, model, pred))
            .collect()
    });

    let total = results.len();
    let mut rows: Vec<(String, [f64; 8])> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for (frame, result) in frames.iter().zip(results) {
        match result {
            Ok(row) => rows.push((frame.id.clone(), row)),
            Err(e) => failures.push((frame.id.clone(), e.to_string())),
        }
    }
    if let Some((first_id, first_error)) = failures.first() {
        if opts.fail_fast {
            return Err(PipelineError::Frames {
                failed: failures.len(),
                total,
                first_id: first_id.clone(),
                first_error: first_error.clone(),
            });
        }
        for (id, msg) in &failures {
            eprintln!("warning: frame {id}: {msg}");
        }
    }

    let mut csv = String::from("frame_id");
    for col in METRIC_COLUMNS {
        csv.push(',');
        csv.push_str(col);
    }
    csv.push('\n');
    for (id, row) in &rows {
        csv.push_str(id);
        for v in row {
            csv.push(',');
            csv.push_str(&fmt_f64(*v));
        }
        csv.push('\n');
    }
    let bare: Vec<[f64; 8]> = rows.iter().map(|(_, r)| *r).collect();
    let (mean, std) = aggregate(&bare);
    for (label, row) in [("mean", mean), ("std", std)] {
        csv.push_str(label);
        for v in row {
            csv.push(',');
            csv.push_str(&fmt_f64(v));
        }
        csv.push('\n');
    }
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
    }
    atomic_write(out_path, csv.as_bytes())?;

    if !failures.is_empty() {
        let (first_id, first_error) = failures.swap_remove(0);
        return Err(PipelineError::Frames {
            failed: failures.len() + 1,
            total,
            first_id,
            first_error,
        });
    }
    Ok(EvalOutcome { csv_path: out_path.to_path_buf(), frames: rows.len() })
}
