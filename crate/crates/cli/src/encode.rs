//! Batch spectrum encoding: every manifest frame becomes a radar spectrum
//! and a camera spectrum on disk, plus an index file mapping frame ids to
//! artifacts.
//!
//! Frames encode in parallel on a dedicated worker pool, but all artifact
//! content and the index are pure functions of (manifest, config), so
//! reruns are byte-identical regardless of worker count or scheduling. The
//! index is written last, by the coordinator, only after every frame has
//! settled — combined with temp-file renames this means a killed run never
//! leaves a truncated index behind.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spatspec_core::geometry::project_to_depth_map;
use spatspec_core::spectrum::{transform_camera_with, transform_radar_with, SpectrumEncoder};
use spatspec_core::{PixelGrid, Spectrum};

use crate::config::ResolvedConfig;
use crate::error::{PipelineError, Result};
use crate::formats::{atomic_write, read_cloud_csv, read_grid, write_grid_csv, write_grid_pgm};
use crate::manifest::{FrameEntry, Manifest, RadarData};

/// Batch execution knobs shared by the pipeline commands.
#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub workers: usize,
    pub fail_fast: bool,
    pub preview: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { workers: default_workers(), fail_fast: false, preview: false }
    }
}

/// Default worker count: the logical core count.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Builds a rayon pool of the requested size.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Usage(format!("cannot build worker pool: {e}")))
}

/// Loads a frame's radar side as an inverse-depth raster at camera
/// resolution: clouds get projected, pre-rendered maps get validated.
pub fn load_radar_raster(
    frame: &FrameEntry,
    camera: &spatspec_core::CameraModel,
) -> Result<PixelGrid> {
    match &frame.radar {
        RadarData::Cloud(path) => {
            let cloud = read_cloud_csv(path)?;
            Ok(project_to_depth_map(&cloud, camera))
        }
        RadarData::Depth(path) => {
            let grid = read_grid(path)?;
            if grid.rows() != camera.height() || grid.cols() != camera.width() {
                return Err(PipelineError::Parse {
                    path: path.clone(),
                    line: 0,
                    msg: format!(
                        "radar depth map is {}x{} but the camera image is {}x{}",
                        grid.rows(),
                        grid.cols(),
                        camera.height(),
                        camera.width()
                    ),
                });
            }
            Ok(grid)
        }
    }
}

/// One frame's encode artifacts (paths relative to the output directory).
#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub id: String,
    pub radar_spectrum: String,
    pub cam_spectrum: String,
}

#[derive(Debug)]
pub struct EncodeOutcome {
    pub index_path: PathBuf,
    pub frames: Vec<EncodedFrame>,
}

/// Encodes one frame and writes its artifacts; pure given its inputs.
fn encode_frame(
    frame: &FrameEntry,
    manifest: &Manifest,
    radar_encoder: &SpectrumEncoder,
    cam_encoder: &SpectrumEncoder,
    log_compress: bool,
    out_dir: &Path,
    preview: bool,
) -> Result<EncodedFrame> {
    let raster = load_radar_raster(frame, &manifest.camera)?;
    let mask = read_grid(&frame.mask)?;

    let p_radar: Spectrum = transform_radar_with(radar_encoder, &raster, log_compress);
    let p_cam: Spectrum = transform_camera_with(cam_encoder, &mask, log_compress)?;

    let radar_rel = format!("{}.radar.csv", frame.id);
    let cam_rel = format!("{}.cam.csv", frame.id);
    write_grid_csv(&out_dir.join(&radar_rel), p_radar.grid())?;
    write_grid_csv(&out_dir.join(&cam_rel), p_cam.grid())?;
    if preview {
        write_grid_pgm(&out_dir.join(format!("{}.radar.pgm", frame.id)), p_radar.grid())?;
        write_grid_pgm(&out_dir.join(format!("{}.cam.pgm", frame.id)), p_cam.grid())?;
    }
    Ok(EncodedFrame { id: frame.id.clone(), radar_spectrum: radar_rel, cam_spectrum: cam_rel })
}

/// Encodes every manifest frame into `out_dir` and writes `index.csv`.
///
/// Without `fail_fast`, per-frame failures are collected: every healthy
/// frame is still encoded and indexed, the failures go to one summary
/// error. With `fail_fast`, the first failure aborts the run and no index
/// is written.
pub fn run_encode(
    manifest: &Manifest,
    cfg: &ResolvedConfig,
    out_dir: &Path,
    opts: &BatchOptions,
) -> Result<EncodeOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let radar_encoder = SpectrumEncoder::new(
        cfg.encoding.m_radar(),
        cfg.encoding.phi(),
        cfg.encoding.theta(),
    )?;
    let cam_encoder =
        SpectrumEncoder::new(cfg.encoding.m_cam(), cfg.encoding.phi(), cfg.encoding.theta())?;
    let log_compress = cfg.encoding.log_compress();

    let pool = worker_pool(opts.workers)?;
    let results: Vec<Result<EncodedFrame>> = pool.install(|| {
        manifest
            .frames
            .par_iter()
            .map(|f| {
                encode_frame(
                    f,
                    manifest,
                    &radar_encoder,
                    &cam_encoder,
                    log_compress,
                    out_dir,
                    opts.preview,
                )
            })
            .collect()
    });

    let total = results.len();
    let mut frames = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for (frame, result) in manifest.frames.iter().zip(results) {
        match result {
            Ok(encoded) => frames.push(encoded),
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

    // Index last, by the coordinator, in manifest order.
    let mut index = String::from("frame_id,radar_spectrum,cam_spectrum\n");
    for f in &frames {
        index.push_str(&format!("{},{},{}\n", f.id, f.radar_spectrum, f.cam_spectrum));
    }
    let index_path = out_dir.join("index.csv");
    atomic_write(&index_path, index.as_bytes())?;

    if !failures.is_empty() {
        let (first_id, first_error) = failures.swap_remove(0);
        return Err(PipelineError::Frames { failed: failures.len() + 1, total, first_id, first_error });
    }
    Ok(EncodeOutcome { index_path, frames })
}
