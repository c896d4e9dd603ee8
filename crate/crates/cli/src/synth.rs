//! Synthetic dataset generator: random box/pole scenes rendered to dense
//! ground-truth clouds, projected depth maps, segmentation masks, and
//! sparse noisy radar clouds — everything the acceptance suite needs with
//! zero external data.
//!
//! Per frame: a handful of boxes (class 1) and poles (class 2) get sampled
//! on their camera-facing surfaces at one-pixel metric spacing, giving a
//! dense ground-truth cloud whose projection fills coherent image regions.
//! The mask starts as the per-pixel class of the nearest surface (so mask
//! support equals depth support) and then takes light noise: a little
//! dropout and a few spurious pixels. The radar cloud is a sparse subsample
//! of the ground truth with Gaussian position jitter plus a few uniform
//! clutter points.
//!
//! All grids and clouds are written as exact CSV (not PGM — 16-bit
//! quantization would corrupt mask class ids and break byte-identical
//! reruns), and every random draw comes from per-frame ChaCha streams
//! derived from the seed, so a (seed, frames) pair always produces the same
//! bytes.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatspec_core::geometry::project_to_depth_map;
use spatspec_core::{CameraModel, PixelGrid, PointCloud};

use crate::config::EncodingOverrides;
use crate::error::{PipelineError, Result};
use crate::formats::{write_cloud_csv, write_grid_csv};
use crate::manifest::{manifest_to_string, FrameRecord};

/// Image size of the synthetic camera.
const WIDTH: usize = 64;
const HEIGHT: usize = 48;
/// Focal length giving roughly a 58-degree horizontal half-FOV.
const FOCAL: f64 = 20.0;
const DEPTH_MIN: f64 = 1.0;
const DEPTH_MAX: f64 = 30.0;

/// Fraction of ground-truth points that survive into the radar cloud.
const RADAR_KEEP: f64 = 0.06;
/// Standard deviation of radar position jitter, meters.
const RADAR_SIGMA: f64 = 0.08;
/// Mask dropout probability (foreground pixel cleared).
const MASK_DROPOUT: f64 = 0.02;
/// Spurious mask pixel probability (background pixel set).
const MASK_SPURIOUS: f64 = 0.005;

pub struct SynthOptions {
    pub frames: usize,
    pub seed: u64,
    /// Extra header defaults embedded in the generated manifest.
    pub defaults: EncodingOverrides,
}

/// The camera every synthetic dataset uses.
pub fn synth_camera() -> CameraModel {
    CameraModel::new(
        FOCAL,
        FOCAL,
        WIDTH as f64 / 2.0 - 0.5,
        HEIGHT as f64 / 2.0 - 0.5,
        WIDTH,
        HEIGHT,
        DEPTH_MIN,
        DEPTH_MAX,
    )
    .expect("fixed synthetic camera is valid")
}

struct SceneObject {
    class: u32,
    /// Surface samples in camera coordinates.
    points: Vec<[f64; 3]>,
}

/// Standard normal via Box-Muller.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Samples one box front face (class 1) at one-pixel metric spacing.
fn sample_box(rng: &mut ChaCha8Rng, cam: &CameraModel) -> SceneObject {
    let z: f64 = rng.random_range(4.0..15.0);
    let half_w_view = 0.5 * cam.width() as f64 * z / cam.fx();
    let half_h_view = 0.5 * cam.height() as f64 * z / cam.fy();
    let cx = rng.random_range(-0.55..0.55) * half_w_view;
    let cy = rng.random_range(-0.5..0.5) * half_h_view;
    let wx: f64 = rng.random_range(0.3..1.2);
    let hy: f64 = rng.random_range(0.3..1.2);
    let step = z / cam.fx();
    let mut points = Vec::new();
    let nx = ((2.0 * wx / step).ceil() as usize).max(1);
    let ny = ((2.0 * hy / step).ceil() as usize).max(1);
    for iy in 0..=ny {
        for ix in 0..=nx {
            let x = cx - wx + 2.0 * wx * ix as f64 / nx as f64;
            let y = cy - hy + 2.0 * hy * iy as f64 / ny as f64;
            points.push([x, y, z]);
        }
    }
    SceneObject { class: 1, points }
}

/// Samples one vertical pole (class 2) spanning most of the view height.
fn sample_pole(rng: &mut ChaCha8Rng, cam: &CameraModel) -> SceneObject {
    let z: f64 = rng.random_range(3.0..12.0);
    let half_w_view = 0.5 * cam.width() as f64 * z / cam.fx();
    let half_h_view = 0.5 * cam.height() as f64 * z / cam.fy();
    let cx = rng.random_range(-0.6..0.6) * half_w_view;
    let radius: f64 = rng.random_range(0.05..0.15);
    let top = -rng.random_range(0.5..0.85) * half_h_view;
    let bottom = rng.random_range(0.5..0.85) * half_h_view;
    let step = z / cam.fx();
    let mut points = Vec::new();
    let ny = (((bottom - top) / step).ceil() as usize).max(1);
    let nx = ((2.0 * radius / step).ceil() as usize).max(1);
    for iy in 0..=ny {
        for ix in 0..=nx {
            let x = cx - radius + 2.0 * radius * ix as f64 / nx as f64;
            let y = top + (bottom - top) * iy as f64 / ny as f64;
            points.push([x, y, z]);
        }
    }
    SceneObject { class: 2, points }
}

struct Frame {
    gt_cloud: PointCloud,
    gt_depth: PixelGrid,
    mask: PixelGrid,
    radar_cloud: PointCloud,
}

/// Renders one deterministic scene from its own RNG stream.
fn render_frame(rng: &mut ChaCha8Rng, cam: &CameraModel) -> Frame {
    let n_boxes = rng.random_range(2..=4);
    let n_poles = rng.random_range(1..=3);
    let mut objects = Vec::new();
    for _ in 0..n_boxes {
        objects.push(sample_box(rng, cam));
    }
    for _ in 0..n_poles {
        objects.push(sample_pole(rng, cam));
    }

    // Per-pixel z-buffer carrying (inverse depth, class id); nearest wins,
    // matching the projection collision rule.
    let mut inv = vec![0.0f64; cam.width() * cam.height()];
    let mut cls = vec![0u32; cam.width() * cam.height()];
    let mut gt_points = Vec::new();
    for obj in &objects {
        for &[x, y, z] in &obj.points {
            gt_points.push([x, y, z]);
            let u = (cam.fx() * x / z + cam.cx()).round();
            let v = (cam.fy() * y / z + cam.cy()).round();
            if u < 0.0 || v < 0.0 || u >= cam.width() as f64 || v >= cam.height() as f64 {
                continue;
            }
            let idx = v as usize * cam.width() + u as usize;
            let value = cam.depth_min() / z;
            if value > inv[idx] {
                inv[idx] = value;
                cls[idx] = obj.class;
            }
        }
    }

    // Mask = class of the nearest surface, plus noise: dropout on
    // foreground, spurious classes on background.
    let mut mask = vec![0.0f64; cls.len()];
    for (i, &c) in cls.iter().enumerate() {
        if c > 0 {
            if rng.random::<f64>() >= MASK_DROPOUT {
                mask[i] = c as f64;
            }
        } else if rng.random::<f64>() < MASK_SPURIOUS {
            mask[i] = rng.random_range(1..=2) as f64;
        }
    }

    // Radar: sparse jittered subsample of the ground truth plus clutter.
    let mut radar = Vec::new();
    for &[x, y, z] in &gt_points {
        if rng.random::<f64>() < RADAR_KEEP {
            radar.push([
                x + RADAR_SIGMA * gauss(rng),
                y + RADAR_SIGMA * gauss(rng),
                (z + RADAR_SIGMA * gauss(rng)).max(cam.depth_min()),
            ]);
        }
    }
    let n_clutter = rng.random_range(5..=15);
    for _ in 0..n_clutter {
        let z = rng.random_range(cam.depth_min() + 0.5..cam.depth_max());
        let half_w_view = 0.5 * cam.width() as f64 * z / cam.fx();
        let half_h_view = 0.5 * cam.height() as f64 * z / cam.fy();
        radar.push([
            rng.random_range(-1.0..1.0) * half_w_view,
            rng.random_range(-1.0..1.0) * half_h_view,
            z,
        ]);
    }

    let gt_cloud = PointCloud::new(gt_points).expect("synthetic points are finite");
    let gt_depth = project_to_depth_map(&gt_cloud, cam);
    Frame {
        gt_cloud,
        gt_depth,
        mask: PixelGrid::new(cam.height(), cam.width(), mask).expect("mask grid is finite"),
        radar_cloud: PointCloud::new(radar).expect("radar points are finite"),
    }
}

/// Generates `opts.frames` scenes under `out_dir` and writes the manifest.
/// Returns the manifest path.
pub fn generate(out_dir: &Path, opts: &SynthOptions) -> Result<PathBuf> {
    if opts.frames == 0 {
        return Err(PipelineError::Usage("--frames must be at least 1".into()));
    }
    let frames_dir = out_dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| PipelineError::io(&frames_dir, e))?;
    let cam = synth_camera();

    let mut records = Vec::with_capacity(opts.frames);
    for i in 0..opts.frames {
        // A distinct, seed-derived stream per frame keeps frames
        // independent of each other and of the frame count.
        let stream = opts.seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let frame = render_frame(&mut rng, &cam);
        let id = format!("frame{i:03}");

        let radar_rel = format!("frames/{id}.radar.csv");
        let mask_rel = format!("frames/{id}.mask.csv");
        let gt_cloud_rel = format!("frames/{id}.gt_cloud.csv");
        let gt_depth_rel = format!("frames/{id}.gt_depth.csv");
        write_cloud_csv(&out_dir.join(&radar_rel), &frame.radar_cloud)?;
        write_grid_csv(&out_dir.join(&mask_rel), &frame.mask)?;
        write_cloud_csv(&out_dir.join(&gt_cloud_rel), &frame.gt_cloud)?;
        write_grid_csv(&out_dir.join(&gt_depth_rel), &frame.gt_depth)?;
        records.push(FrameRecord {
            id,
            radar_cloud: Some(radar_rel),
            radar_depth: None,
            mask: mask_rel,
            gt_cloud: Some(gt_cloud_rel),
            gt_depth: Some(gt_depth_rel),
        });
    }

    let text = manifest_to_string(&cam, &opts.defaults, &records);
    let manifest_path = out_dir.join("manifest.txt");
    crate::formats::atomic_write(&manifest_path, text.as_bytes())?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::load_manifest;
    use tempfile::TempDir;

    fn options(frames: usize, seed: u64) -> SynthOptions {
        SynthOptions { frames, seed, defaults: EncodingOverrides::default() }
    }

    #[test]
    fn generated_dataset_loads_and_is_well_formed() {
        let dir = TempDir::new().unwrap();
        let mpath = generate(dir.path(), &options(3, 7)).unwrap();
        let m = load_manifest(&mpath).unwrap();
        assert_eq!(m.frames.len(), 3);
        assert_eq!(m.camera, synth_camera());
        for frame in &m.frames {
            assert!(frame.has_ground_truth());
            let mask = crate::formats::read_grid(&frame.mask).unwrap();
            assert_eq!((mask.rows(), mask.cols()), (HEIGHT, WIDTH));
            // Mask values are exact small integer class ids.
            assert!(mask.values().iter().all(|&v| v == 0.0 || v == 1.0 || v == 2.0));
            let gt_depth = crate::formats::read_grid(frame.gt_depth.as_ref().unwrap()).unwrap();
            assert!(gt_depth.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(gt_depth.values().iter().any(|&v| v > 0.0));
        }
    }

    #[test]
    fn mask_support_tracks_depth_support_up_to_noise() {
        let dir = TempDir::new().unwrap();
        let mpath = generate(dir.path(), &options(5, 11)).unwrap();
        let m = load_manifest(&mpath).unwrap();
        for frame in &m.frames {
            let mask = crate::formats::read_grid(&frame.mask).unwrap();
            let depth = crate::formats::read_grid(frame.gt_depth.as_ref().unwrap()).unwrap();
            let total: usize = depth.values().iter().filter(|&&v| v > 0.0).count();
            let agree: usize = mask
                .values()
                .iter()
                .zip(depth.values())
                .filter(|&(&mv, &dv)| (mv > 0.0) == (dv > 0.0))
                .count();
            // Noise is ~2% dropout + ~0.5% spurious, so agreement over all
            // pixels stays high.
            assert!(total > 50, "degenerate scene: only {total} covered pixels");
            let frac = agree as f64 / mask.values().len() as f64;
            assert!(frac > 0.95, "mask/depth agreement only {frac}");
        }
    }

    #[test]
    fn radar_cloud_is_sparse_relative_to_ground_truth() {
        let dir = TempDir::new().unwrap();
        let mpath = generate(dir.path(), &options(4, 3)).unwrap();
        let m = load_manifest(&mpath).unwrap();
        for frame in &m.frames {
            let radar = match &frame.radar {
                crate::manifest::RadarData::Cloud(p) => crate::formats::read_cloud_csv(p).unwrap(),
                other => panic!("expected radar cloud, got {other:?}"),
            };
            let gt = crate::formats::read_cloud_csv(frame.gt_cloud.as_ref().unwrap()).unwrap();
            assert!(!radar.is_empty());
            assert!(
                radar.len() < gt.len() / 4,
                "radar ({}) should be much sparser than gt ({})",
                radar.len(),
                gt.len()
            );
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let d1 = TempDir::new().unwrap();
        let d2 = TempDir::new().unwrap();
        let d3 = TempDir::new().unwrap();
        generate(d1.path(), &options(2, 5)).unwrap();
        generate(d2.path(), &options(2, 5)).unwrap();
        generate(d3.path(), &options(2, 6)).unwrap();
        let slurp = |dir: &Path| {
            let mut all = Vec::new();
            let mut paths: Vec<_> = std::fs::read_dir(dir.join("frames"))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            paths.sort();
            for p in paths {
                all.push((p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap()));
            }
            all
        };
        assert_eq!(slurp(d1.path()), slurp(d2.path()));
        assert_ne!(slurp(d1.path()), slurp(d3.path()));
    }

    #[test]
    fn zero_frames_is_a_usage_error() {
        let dir = TempDir::new().unwrap();
        assert!(matches!(
            generate(dir.path(), &options(0, 1)),
            Err(PipelineError::Usage(_))
        ));
    }
}
