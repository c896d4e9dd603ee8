//! Command-line interface: one binary, six subcommands, a strict exit
//! contract.
//!
//! Exit status is 0 on success, 1 on a runtime failure (one
//! machine-parseable `error:` line on standard error), and 2 on a usage
//! error. All diagnostics go to standard error; data goes to files or, for
//! `gradcheck`, standard output.
//!
//! Flag layering: an explicit command-line flag beats a manifest header
//! default, which beats the built-in default. Only `--seed` feeds
//! randomness anywhere.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{resolve, EncodingOverrides, ResolvedConfig, DEFAULT_SEED};
use crate::encode::{default_workers, BatchOptions};
use crate::error::{PipelineError, Result};
use crate::evalcmd::run_eval;
use crate::formats::read_checkpoint;
use crate::manifest::{load_manifest, Manifest};
use crate::sweep::{run_sweep, SweepMetric};
use crate::synth::{generate, SynthOptions};
use crate::traincmd::{run_gradcheck, run_train};

/// Spectrum-encoding flags shared by the pipeline subcommands. All of them
/// are optional: values omitted here fall back to the manifest's header
/// defaults, then to the built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct EncodingFlags {
    /// Radar segment count [default: 20]
    #[arg(long, value_name = "INT")]
    pub m_radar: Option<usize>,

    /// Camera segment count; must exceed the radar count [default: 200]
    #[arg(long, value_name = "INT")]
    pub m_cam: Option<usize>,

    /// Azimuth window lower edge, degrees [default: -70]
    #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
    pub phi_min: Option<f64>,

    /// Azimuth window upper edge, degrees [default: 70]
    #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
    pub phi_max: Option<f64>,

    /// Elevation window lower edge, degrees [default: -70]
    #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
    pub theta_min: Option<f64>,

    /// Elevation window upper edge, degrees [default: 70]
    #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
    pub theta_max: Option<f64>,

    /// Azimuth sample count N [default: 128]
    #[arg(long, value_name = "INT")]
    pub n_phi: Option<usize>,

    /// Elevation sample count K [default: 128]
    #[arg(long, value_name = "INT")]
    pub k_theta: Option<usize>,

    /// Histogram bins for mutual information [default: 64]
    #[arg(long, value_name = "INT")]
    pub bins: Option<usize>,

    /// Natural-log dynamic-range compression of spectra [default: true]
    #[arg(long, value_name = "BOOL")]
    pub log_compress: Option<bool>,

    /// Normalized spectrum threshold for back-projection, in (0, 1)
    /// [default: 0.2]
    #[arg(long, value_name = "FLOAT")]
    pub threshold: Option<f64>,
}

impl EncodingFlags {
    fn overrides(&self) -> EncodingOverrides {
        EncodingOverrides {
            m_radar: self.m_radar,
            m_cam: self.m_cam,
            phi_min: self.phi_min,
            phi_max: self.phi_max,
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            n_phi: self.n_phi,
            k_theta: self.k_theta,
            bins: self.bins,
            log_compress: self.log_compress,
            threshold: self.threshold,
        }
    }

    /// Rejects an explicit, self-contradictory segment pair before any
    /// file is touched, so the violation is named even when other
    /// required flags are absent.
    fn check_explicit_segments(&self) -> Result<()> {
        if let (Some(r), Some(c)) = (self.m_radar, self.m_cam) {
            if c <= r {
                return Err(PipelineError::Usage(format!(
                    "--m-cam ({c}) must exceed --m-radar ({r})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "spatspec",
    version,
    about = "Spatial-spectrum fusion pipeline for sparse radar and camera data",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Encode every manifest frame into radar and camera spectra
    Encode {
        /// Dataset manifest path (required)
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Output directory for spectra and the index (required)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,

        #[command(flatten)]
        enc: EncodingFlags,

        /// Worker threads for frame-level parallelism [default: logical cores]
        #[arg(long, value_name = "INT")]
        workers: Option<usize>,

        /// Abort on the first failing frame instead of collecting failures
        #[arg(long)]
        fail_fast: bool,

        /// Also write a 16-bit PGM preview next to each spectrum
        #[arg(long)]
        preview: bool,
    },

    /// Sweep segment counts and average a spectrum-similarity metric
    Sweep {
        /// Dataset manifest path (required)
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Output CSV path for the sweep surface (required)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,

        /// Comma-separated segment counts to sweep (required)
        #[arg(long, value_name = "INT,INT,...", value_delimiter = ',')]
        m_values: Vec<usize>,

        /// Cell metric: pearson, mutual_info, mse or ssim [default: mse]
        #[arg(long, value_name = "NAME")]
        metric: Option<String>,

        #[command(flatten)]
        enc: EncodingFlags,

        /// Worker threads for frame-level parallelism [default: logical cores]
        #[arg(long, value_name = "INT")]
        workers: Option<usize>,
    },

    /// Train the spectrum enhancer on a manifest and save a checkpoint
    Train {
        /// Dataset manifest path (required)
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Output directory for model.ckpt and loss.csv (required)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,

        /// Training epochs
        #[arg(long, value_name = "INT", default_value_t = 100)]
        epochs: usize,

        /// Gradient-descent learning rate
        #[arg(long, value_name = "FLOAT", default_value_t = 0.1)]
        lr: f64,

        /// Random seed (model initialization)
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        enc: EncodingFlags,

        /// Worker threads for frame-level parallelism [default: logical cores]
        #[arg(long, value_name = "INT")]
        workers: Option<usize>,
    },

    /// Evaluate predicted spectra against ground truth
    Eval {
        /// Dataset manifest path (required)
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,

        /// Directory holding <frame_id>.radar.csv predictions (required)
        #[arg(long, value_name = "DIR")]
        pred: Option<PathBuf>,

        /// Output CSV path for the metric report (required)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,

        /// Optional enhancer checkpoint applied to each spectrum
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,

        /// Random seed (tags a loaded checkpoint)
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        enc: EncodingFlags,

        /// Worker threads for frame-level parallelism [default: logical cores]
        #[arg(long, value_name = "INT")]
        workers: Option<usize>,

        /// Abort on the first failing frame instead of collecting failures
        #[arg(long)]
        fail_fast: bool,
    },

    /// Generate a synthetic box-and-pole dataset with ground truth
    GenSynthetic {
        /// Output directory for frames/ and manifest.txt (required)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,

        /// Number of frames to generate
        #[arg(long, value_name = "INT", default_value_t = 8)]
        frames: usize,

        /// Random seed (scene content)
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        enc: EncodingFlags,
    },

    /// Compare analytic enhancer gradients against central differences
    Gradcheck {
        /// Random seed (model init and probe pair)
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_SEED)]
        seed: u64,

        /// Training steps to take before checking
        #[arg(long, value_name = "INT", default_value_t = 0)]
        steps: usize,

        /// Central-difference step size
        #[arg(long, value_name = "FLOAT", default_value_t = 1e-5)]
        epsilon: f64,

        /// Largest acceptable relative gradient error
        #[arg(long, value_name = "FLOAT", default_value_t = 1e-4)]
        tol: f64,
    },
}

fn require<T>(value: Option<T>, flag: &str, command: &str) -> Result<T> {
    value.ok_or_else(|| PipelineError::Usage(format!("{command} requires {flag}")))
}

/// Loads the manifest and resolves the layered configuration: explicit
/// flags beat manifest defaults beat built-ins.
fn load_and_resolve(
    manifest_path: &PathBuf,
    enc: &EncodingFlags,
) -> Result<(Manifest, ResolvedConfig)> {
    let manifest = load_manifest(manifest_path)?;
    let cfg = resolve(&enc.overrides().or(&manifest.defaults))?;
    Ok((manifest, cfg))
}

fn batch_options(workers: Option<usize>, fail_fast: bool, preview: bool) -> BatchOptions {
    BatchOptions { workers: workers.unwrap_or_else(default_workers), fail_fast, preview }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode { manifest, out, enc, workers, fail_fast, preview } => {
            enc.check_explicit_segments()?;
            let manifest_path = require(manifest, "--manifest", "encode")?;
            let out = require(out, "--out", "encode")?;
            let (manifest, cfg) = load_and_resolve(&manifest_path, &enc)?;
            let opts = batch_options(workers, fail_fast, preview);
            let outcome = crate::encode::run_encode(&manifest, &cfg, &out, &opts)?;
            eprintln!(
                "encoded {} frames into {}",
                outcome.frames.len(),
                out.display()
            );
            Ok(())
        }
        Command::Sweep { manifest, out, m_values, metric, enc, workers } => {
            enc.check_explicit_segments()?;
            let manifest_path = require(manifest, "--manifest", "sweep")?;
            let out = require(out, "--out", "sweep")?;
            let metric: SweepMetric = metric.as_deref().unwrap_or("mse").parse()?;
            let (manifest, cfg) = load_and_resolve(&manifest_path, &enc)?;
            let opts = batch_options(workers, false, false);
            let ms = m_values.iter().copied().collect();
            let outcome = run_sweep(&manifest, &cfg, &ms, metric, &out, &opts)?;
            eprintln!(
                "sweep wrote {} cells to {} ({} degenerate skips)",
                outcome.cells,
                outcome.csv_path.display(),
                outcome.warnings
            );
            Ok(())
        }
        Command::Train { manifest, out, epochs, lr, seed, enc, workers } => {
            enc.check_explicit_segments()?;
            let manifest_path = require(manifest, "--manifest", "train")?;
            let out = require(out, "--out", "train")?;
            let (manifest, cfg) = load_and_resolve(&manifest_path, &enc)?;
            let opts = batch_options(workers, false, false);
            let outcome = run_train(&manifest, &cfg, epochs, lr, seed, &out, &opts)?;
            match (outcome.first_loss, outcome.final_loss) {
                (Some(first), Some(last)) => eprintln!(
                    "trained {epochs} epochs: loss {first:.6} -> {last:.6}; checkpoint {}",
                    outcome.checkpoint_path.display()
                ),
                _ => eprintln!(
                    "trained 0 epochs; checkpoint {}",
                    outcome.checkpoint_path.display()
                ),
            }
            Ok(())
        }
        Command::Eval { manifest, pred, out, model, seed, enc, workers, fail_fast } => {
            enc.check_explicit_segments()?;
            let manifest_path = require(manifest, "--manifest", "eval")?;
            let pred = require(pred, "--pred", "eval")?;
            let out = require(out, "--out", "eval")?;
            let (manifest, cfg) = load_and_resolve(&manifest_path, &enc)?;
            let model = match model {
                Some(path) => {
                    let tensors = read_checkpoint(&path)?;
                    Some(spatspec_core::learner::EnhancerModel::import_tensors(
                        seed, &tensors,
                    )?)
                }
                None => None,
            };
            let opts = batch_options(workers, fail_fast, false);
            let outcome = run_eval(&manifest, &cfg, &pred, model.as_ref(), &out, &opts)?;
            eprintln!(
                "evaluated {} frames -> {}",
                outcome.frames,
                outcome.csv_path.display()
            );
            Ok(())
        }
        Command::GenSynthetic { out, frames, seed, enc } => {
            enc.check_explicit_segments()?;
            let out = require(out, "--out", "gen-synthetic")?;
            let opts = SynthOptions { frames, seed, defaults: enc.overrides() };
            let manifest_path = generate(&out, &opts)?;
            eprintln!("generated {frames} frames under {}", manifest_path.display());
            Ok(())
        }
        Command::Gradcheck { seed, steps, epsilon, tol } => {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(PipelineError::Usage(format!(
                    "tol must be positive and finite, got {tol}"
                )));
            }
            let worst = run_gradcheck(seed, steps, epsilon)?;
            println!("max_relative_error={}", crate::formats::fmt_f64(worst));
            if worst > tol {
                return Err(PipelineError::Runtime(format!(
                    "gradient check failed: {worst} exceeds tolerance {tol}"
                )));
            }
            Ok(())
        }
    }
}

/// Parses the process arguments, runs the chosen command, and returns the
/// exit status: 0 success, 1 runtime error, 2 usage error.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout and errors (which always
            // name the offending flag) to stderr on its own.
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
