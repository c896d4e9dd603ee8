//! Encoding configuration plumbing: built-in defaults, manifest header
//! defaults, and command-line overrides, merged in that order of increasing
//! precedence.

use spatspec_core::{AngleGrid, EncodingConfig};

use crate::error::{PipelineError, Result};

/// Built-in defaults (the values `--help` documents).
pub const DEFAULT_M_RADAR: usize = 20;
pub const DEFAULT_M_CAM: usize = 200;
pub const DEFAULT_PHI_MIN: f64 = -70.0;
pub const DEFAULT_PHI_MAX: f64 = 70.0;
pub const DEFAULT_THETA_MIN: f64 = -70.0;
pub const DEFAULT_THETA_MAX: f64 = 70.0;
pub const DEFAULT_N_PHI: usize = 128;
pub const DEFAULT_K_THETA: usize = 128;
pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_LOG_COMPRESS: bool = true;
pub const DEFAULT_THRESHOLD: f64 = 0.2;
pub const DEFAULT_SEED: u64 = 42;

/// A partial encoding configuration; `None` means "no opinion here".
///
/// Both the manifest header and the command line produce one of these;
/// [`EncodingOverrides::or`] layers them and [`resolve`] fills the rest
/// from the built-in defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncodingOverrides {
    pub m_radar: Option<usize>,
    pub m_cam: Option<usize>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub n_phi: Option<usize>,
    pub k_theta: Option<usize>,
    pub bins: Option<usize>,
    pub log_compress: Option<bool>,
    pub threshold: Option<f64>,
}

impl EncodingOverrides {
    /// Layers `self` over `weaker`: every field keeps `self`'s value when
    /// present and falls back to `weaker` otherwise.
    pub fn or(&self, weaker: &EncodingOverrides) -> EncodingOverrides {
        EncodingOverrides {
            m_radar: self.m_radar.or(weaker.m_radar),
            m_cam: self.m_cam.or(weaker.m_cam),
            phi_min: self.phi_min.or(weaker.phi_min),
            phi_max: self.phi_max.or(weaker.phi_max),
            theta_min: self.theta_min.or(weaker.theta_min),
            theta_max: self.theta_max.or(weaker.theta_max),
            n_phi: self.n_phi.or(weaker.n_phi),
            k_theta: self.k_theta.or(weaker.k_theta),
            bins: self.bins.or(weaker.bins),
            log_compress: self.log_compress.or(weaker.log_compress),
            threshold: self.threshold.or(weaker.threshold),
        }
    }
}

/// A fully-determined configuration, ready for the pipeline.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub encoding: EncodingConfig,
    pub bins: usize,
    pub threshold: f64,
}

/// Fills unset fields with built-in defaults and validates the result.
///
/// `m_cam <= m_radar` is a configuration contradiction and comes back as
/// [`PipelineError::Usage`] (exit status 2); malformed angle windows
/// likewise.
pub fn resolve(overrides: &EncodingOverrides) -> Result<ResolvedConfig> {
    let m_radar = overrides.m_radar.unwrap_or(DEFAULT_M_RADAR);
    let m_cam = overrides.m_cam.unwrap_or(DEFAULT_M_CAM);
    if m_cam <= m_radar {
        return Err(PipelineError::Usage(format!(
            "--m-cam must exceed --m-radar, got m_cam={m_cam} <= m_radar={m_radar}"
        )));
    }
    if m_radar == 0 {
        return Err(PipelineError::Usage("--m-radar must be at least 1".into()));
    }
    let phi = AngleGrid::new(
        overrides.phi_min.unwrap_or(DEFAULT_PHI_MIN),
        overrides.phi_max.unwrap_or(DEFAULT_PHI_MAX),
        overrides.n_phi.unwrap_or(DEFAULT_N_PHI),
    )
    .map_err(|e| PipelineError::Usage(format!("phi window: {e}")))?;
    let theta = AngleGrid::new(
        overrides.theta_min.unwrap_or(DEFAULT_THETA_MIN),
        overrides.theta_max.unwrap_or(DEFAULT_THETA_MAX),
        overrides.k_theta.unwrap_or(DEFAULT_K_THETA),
    )
    .map_err(|e| PipelineError::Usage(format!("theta window: {e}")))?;
    let log_compress = overrides.log_compress.unwrap_or(DEFAULT_LOG_COMPRESS);
    let encoding = EncodingConfig::new(m_radar, m_cam, phi, theta, log_compress)?;

    let bins = overrides.bins.unwrap_or(DEFAULT_BINS);
    if bins < 2 {
        return Err(PipelineError::Usage(format!("--bins must be at least 2, got {bins}")));
    }
    let threshold = overrides.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(PipelineError::Usage(format!(
            "--threshold must lie strictly between 0 and 1, got {threshold}"
        )));
    }
    Ok(ResolvedConfig { encoding, bins, threshold })
}
