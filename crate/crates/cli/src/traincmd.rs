//! Training orchestration: build one training pair per manifest frame,
//! fit the enhancer by full-batch gradient descent, and persist the model
//! checkpoint plus the loss curve.
//!
//! Both spectra of a pair are min-max normalized before the target product
//! is formed — raw periodogram power scales with the segment count, and
//! the enhancer's positive output head starts near ln 2, so unit-scaled
//! targets keep epoch 0 in a sane regime.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spatspec_core::learner::{
    build_target, gradient_check, train, EnhancerModel, TrainingPair,
};
use spatspec_core::spectrum::{transform_camera_with, transform_radar_with, SpectrumEncoder};
use spatspec_core::{AngleGrid, PixelGrid, Spectrum};

use crate::config::ResolvedConfig;
use crate::encode::{load_radar_raster, worker_pool, BatchOptions};
use crate::error::{PipelineError, Result};
use crate::formats::{atomic_write, fmt_f64, read_grid, write_checkpoint};
use crate::manifest::Manifest;

#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint_path: PathBuf,
    pub loss_path: PathBuf,
    pub first_loss: Option<f64>,
    pub final_loss: Option<f64>,
}

/// Encodes every manifest frame into a normalized (radar, target) pair.
///
/// Any failing frame aborts the run — training on a silently shrunken
/// dataset is never what the caller meant.
pub fn build_pairs(
    manifest: &Manifest,
    cfg: &ResolvedConfig,
    opts: &BatchOptions,
) -> Result<Vec<TrainingPair>> {
    let radar_encoder = SpectrumEncoder::new(
        cfg.encoding.m_radar(),
        cfg.encoding.phi(),
        cfg.encoding.theta(),
    )?;
    let cam_encoder =
        SpectrumEncoder::new(cfg.encoding.m_cam(), cfg.encoding.phi(), cfg.encoding.theta())?;
    let log_compress = cfg.encoding.log_compress();

    let pool = worker_pool(opts.workers)?;
    let results: Vec<Result<TrainingPair>> = pool.install(|| {
        manifest
            .frames
            .par_iter()
            .map(|frame| -> Result<TrainingPair> {
                let raster = load_radar_raster(frame, &manifest.camera)?;
                let mask = read_grid(&frame.mask)?;
                let p_radar =
                    transform_radar_with(&radar_encoder, &raster, log_compress).normalized();
                let p_cam =
                    transform_camera_with(&cam_encoder, &mask, log_compress)?.normalized();
                Ok(build_target(&p_radar, &p_cam)?)
            })
            .collect()
    });

    let total = results.len();
    let mut pairs = Vec::with_capacity(total);
    let mut failures: Vec<(String, String)> = Vec::new();
    for (frame, result) in manifest.frames.iter().zip(results) {
        match result {
            Ok(pair) => pairs.push(pair),
            Err(e) => failures.push((frame.id.clone(), e.to_string())),
        }
    }
    if let Some((first_id, first_error)) = failures.first() {
        for (id, msg) in &failures {
            eprintln!("warning: frame {id}: {msg}");
        }
        return Err(PipelineError::Frames {
            failed: failures.len(),
            total,
            first_id: first_id.clone(),
            first_error: first_error.clone(),
        });
    }
    Ok(pairs)
}

/// Trains an enhancer on the manifest and writes `model.ckpt` and
/// `loss.csv` into `out_dir`.
pub fn run_train(
    manifest: &Manifest,
    cfg: &ResolvedConfig,
    epochs: usize,
    lr: f64,
    seed: u64,
    out_dir: &Path,
    opts: &BatchOptions,
) -> Result<TrainOutcome> {
    let pairs = build_pairs(manifest, cfg, opts)?;
    let model = EnhancerModel::new(seed);
    let (trained, curve) = train(&model, &pairs, epochs, lr)?;

    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let checkpoint_path = out_dir.join("model.ckpt");
    write_checkpoint(&checkpoint_path, &trained.export_tensors())?;

    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in curve.iter().enumerate() {
        csv.push_str(&format!("{epoch},{}\n", fmt_f64(*loss)));
    }
    let loss_path = out_dir.join("loss.csv");
    atomic_write(&loss_path, csv.as_bytes())?;

    Ok(TrainOutcome {
        checkpoint_path,
        loss_path,
        first_loss: curve.first().copied(),
        final_loss: curve.last().copied(),
    })
}

/// A deterministic random training pair for the standalone gradient check:
/// uniform input and target grids on a default angle window.
pub fn synthetic_pair(seed: u64, rows: usize, cols: usize) -> TrainingPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = AngleGrid::new(-70.0, 70.0, rows).expect("static window is valid");
    let theta = AngleGrid::new(-70.0, 70.0, cols).expect("static window is valid");
    let mut random_grid = |rows: usize, cols: usize| {
        let values: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
        PixelGrid::new(rows, cols, values).expect("uniform samples are finite")
    };
    let input = Spectrum::new(random_grid(rows, cols), 16, phi.clone(), theta.clone())
        .expect("shape matches the grids");
    let target = Spectrum::new(random_grid(rows, cols), 16, phi, theta)
        .expect("shape matches the grids");
    TrainingPair::new(input, target).expect("shapes match by construction")
}

/// Builds a fresh model from `seed`, optionally trains it for `steps`
/// epochs on a synthetic pair, then compares analytic gradients against
/// central differences. Returns the worst relative error.
pub fn run_gradcheck(seed: u64, steps: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(PipelineError::Usage(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let pair = synthetic_pair(seed ^ 0x7061_6972, 12, 10);
    let mut model = EnhancerModel::new(seed);
    if steps > 0 {
        let (trained, _) = train(&model, std::slice::from_ref(&pair), steps, 0.1)?;
        model = trained;
    }
    Ok(gradient_check(&model, &pair, epsilon))
}
