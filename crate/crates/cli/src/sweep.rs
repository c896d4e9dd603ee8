//! Ablation sweep over segment counts: how similar do the radar and camera
//! spectra of the same scene look as (m_radar, m_cam) varies?
//!
//! For every pair with `m_cam > m_radar` the chosen metric is averaged over
//! all manifest frames and emitted as one cell of a CSV matrix (rows =
//! m_radar, columns = m_cam). Cells on or below the diagonal stay empty —
//! the camera always gets more segments than the radar. Frames on which the
//! metric is degenerate (e.g. Pearson of a constant spectrum) are skipped
//! with a warning; a cell where every frame is degenerate is recorded as
//! the literal string `nan`, never dropped.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use spatspec_core::metrics::{mse, mutual_information, pearson, ssim};
use spatspec_core::spectrum::{transform_camera_with, transform_radar_with, SpectrumEncoder};
use spatspec_core::{Error as CoreError, PixelGrid};

use crate::config::ResolvedConfig;
use crate::encode::{load_radar_raster, worker_pool, BatchOptions};
use crate::error::{PipelineError, Result};
use crate::formats::{atomic_write, fmt_f64, read_grid};
use crate::manifest::Manifest;

/// The comparison metric a sweep averages over frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Pearson,
    MutualInfo,
    Mse,
    Ssim,
}

impl SweepMetric {
    pub fn name(self) -> &'static str {
        match self {
            SweepMetric::Pearson => "pearson",
            SweepMetric::MutualInfo => "mutual_info",
            SweepMetric::Mse => "mse",
            SweepMetric::Ssim => "ssim",
        }
    }
}

impl FromStr for SweepMetric {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(SweepMetric::Pearson),
            "mutual_info" => Ok(SweepMetric::MutualInfo),
            "mse" => Ok(SweepMetric::Mse),
            "ssim" => Ok(SweepMetric::Ssim),
            other => Err(PipelineError::Usage(format!(
                "unknown metric {other:?} (expected pearson, mutual_info, mse or ssim)"
            ))),
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub csv_path: PathBuf,
    /// Populated (m_radar, m_cam) cells, i.e. pairs with m_cam > m_radar.
    pub cells: usize,
    /// Count of (frame, cell) metric evaluations skipped as degenerate.
    pub warnings: usize,
}

/// Per-frame metric values for every valid cell, in cell order.
type FrameRow = Vec<std::result::Result<f64, String>>;

fn metric_on_normalized(
    metric: SweepMetric,
    radar: &PixelGrid,
    cam: &PixelGrid,
    bins: usize,
) -> spatspec_core::Result<f64> {
    // Both spectra are min-max normalized first: SSIM requires [0, 1]
    // inputs, and a shared scale keeps the surfaces comparable across M
    // (raw spectrum power grows with the segment count).
    match metric {
        SweepMetric::Pearson => pearson(radar, cam),
        SweepMetric::MutualInfo => mutual_information(radar, cam, bins),
        SweepMetric::Mse => mse(radar, cam),
        SweepMetric::Ssim => ssim(radar, cam),
    }
}

/// Runs the sweep and writes the CSV matrix to `out_path`.
pub fn run_sweep(
    manifest: &Manifest,
    cfg: &ResolvedConfig,
    m_values: &BTreeSet<usize>,
    metric: SweepMetric,
    out_path: &Path,
    opts: &BatchOptions,
) -> Result<SweepOutcome> {
    if m_values.is_empty() {
        return Err(CoreError::Domain("sweep needs a nonempty set of segment counts".into()).into());
    }
    if m_values.contains(&0) {
        return Err(CoreError::Domain("segment counts must be positive".into()).into());
    }
    if manifest.frames.is_empty() {
        return Err(CoreError::Domain("sweep needs at least one frame".into()).into());
    }
    let ms: Vec<usize> = m_values.iter().copied().collect();

    // One encoder per segment count, shared by every frame and both sides.
    let encoders: Vec<SpectrumEncoder> = ms
        .iter()
        .map(|&m| SpectrumEncoder::new(m, cfg.encoding.phi(), cfg.encoding.theta()))
        .collect::<spatspec_core::Result<_>>()?;
    let log_compress = cfg.encoding.log_compress();
    let bins = cfg.bins;

    // Valid cells in row-major matrix order: (m_radar index, m_cam index).
    let cells: Vec<(usize, usize)> = (0..ms.len())
        .flat_map(|r| (r + 1..ms.len()).map(move |c| (r, c)))
        .collect();

    let pool = worker_pool(opts.workers)?;
    let rows: Vec<Result<FrameRow>> = pool.install(|| {
        manifest
            .frames
            .par_iter()
            .map(|frame| -> Result<FrameRow> {
                let raster = load_radar_raster(frame, &manifest.camera)?;
                let mask = read_grid(&frame.mask)?;
                // Each segment count encodes both sides once per frame…
                let radar_specs: Vec<PixelGrid> = encoders
                    .iter()
                    .map(|enc| {
                        transform_radar_with(enc, &raster, log_compress)
                            .normalized()
                            .grid()
                            .clone()
                    })
                    .collect();
                let cam_specs: Vec<PixelGrid> = encoders
                    .iter()
                    .map(|enc| {
                        transform_camera_with(enc, &mask, log_compress)
                            .map(|s| s.normalized().grid().clone())
                    })
                    .collect::<spatspec_core::Result<_>>()?;
                // …then every valid pairing is a cheap grid comparison.
                // Degenerate inputs are per-cell data (skipped with a
                // warning); anything else is a hard error for the frame.
                let mut row = FrameRow::with_capacity(cells.len());
                for &(r, c) in &cells {
                    match metric_on_normalized(metric, &radar_specs[r], &cam_specs[c], bins) {
                        Ok(v) => row.push(Ok(v)),
                        Err(CoreError::Degenerate(msg)) => row.push(Err(msg)),
                        Err(e) => return Err(e.into()),
                    }
                }
                Ok(row)
            })
            .collect()
    });

    // Aggregate in manifest order so reruns are byte-identical.
    let mut sums = vec![0.0f64; cells.len()];
    let mut counts = vec![0usize; cells.len()];
    let mut warnings = 0usize;
    for (frame, row) in manifest.frames.iter().zip(rows) {
        let row = row?;
        for (i, value) in row.into_iter().enumerate() {
            match value {
                Ok(v) => {
                    sums[i] += v;
                    counts[i] += 1;
                }
                Err(msg) => {
                    warnings += 1;
                    let (r, c) = cells[i];
                    eprintln!(
                        "warning: frame {} m_radar={} m_cam={}: skipped degenerate input: {msg}",
                        frame.id, ms[r], ms[c]
                    );
                }
            }
        }
    }

    // CSV matrix: header row of m_cam values, one row per m_radar.
    let mut csv = String::from("m_radar/m_cam");
    for &m in &ms {
        csv.push_str(&format!(",{m}"));
    }
    csv.push('\n');
    let cell_index: std::collections::BTreeMap<(usize, usize), usize> =
        cells.iter().copied().enumerate().map(|(i, rc)| (rc, i)).collect();
    for (r, &mr) in ms.iter().enumerate() {
        csv.push_str(&mr.to_string());
        for c in 0..ms.len() {
            csv.push(',');
            if let Some(&i) = cell_index.get(&(r, c)) {
                if counts[i] > 0 {
                    csv.push_str(&fmt_f64(sums[i] / counts[i] as f64));
                } else {
                    csv.push_str("nan");
                }
            }
        }
        csv.push('\n');
    }
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
    }
    atomic_write(out_path, csv.as_bytes())?;
    Ok(SweepOutcome { csv_path: out_path.to_path_buf(), cells: cells.len(), warnings })
}
