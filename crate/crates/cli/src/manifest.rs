//! Dataset manifests: a line-oriented `key=value` header (camera model and
//! encoding defaults) followed by one tab-separated record per frame.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! fx=40 ... height=48 depth_min=1 depth_max=30   (one key per line)
//! m_radar=20                                      (optional defaults)
//! frame0<TAB>radar_cloud=frames/frame0.radar.csv<TAB>mask=frames/frame0.mask.csv<TAB>gt_depth=...
//! ```
//!
//! A record names its fields, so the radar representation is explicit:
//! exactly one of `radar_cloud=` / `radar_depth=`, a required `mask=`, and
//! optional `gt_cloud=` / `gt_depth=`. Relative paths resolve against the
//! manifest's directory. Loading is atomic: every parse problem carries its
//! line number, duplicate frame ids are rejected, and *all* missing files
//! are reported in one error, not just the first.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use spatspec_core::CameraModel;

use crate::config::EncodingOverrides;
use crate::error::{PipelineError, Result};

/// The radar side of a frame: either a raw point cloud or a pre-rendered
/// inverse-depth map.
#[derive(Debug, Clone, PartialEq)]
pub enum RadarData {
    Cloud(PathBuf),
    Depth(PathBuf),
}

/// One dataset frame with all referenced artifact paths resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEntry {
    pub id: String,
    pub radar: RadarData,
    pub mask: PathBuf,
    pub gt_cloud: Option<PathBuf>,
    pub gt_depth: Option<PathBuf>,
}

impl FrameEntry {
    /// Whether any ground truth exists for evaluation.
    pub fn has_ground_truth(&self) -> bool {
        self.gt_cloud.is_some() || self.gt_depth.is_some()
    }
}

/// A fully loaded and validated dataset description.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub root: PathBuf,
    pub camera: CameraModel,
    pub frames: Vec<FrameEntry>,
    pub defaults: EncodingOverrides,
}

/// Relative-path form of a frame record, used when *writing* manifests.
#[derive(Debug, Clone, Default)]
pub struct FrameRecord {
    pub id: String,
    pub radar_cloud: Option<String>,
    pub radar_depth: Option<String>,
    pub mask: String,
    pub gt_cloud: Option<String>,
    pub gt_depth: Option<String>,
}

/// Serializes a manifest (used by the synthetic generator; the loader
/// accepts exactly this shape back).
pub fn manifest_to_string(
    camera: &CameraModel,
    defaults: &EncodingOverrides,
    frames: &[FrameRecord],
) -> String {
    let mut out = String::new();
    out.push_str("# spatspec dataset manifest\n");
    out.push_str(&format!("fx={}\n", camera.fx()));
    out.push_str(&format!("fy={}\n", camera.fy()));
    out.push_str(&format!("cx={}\n", camera.cx()));
    out.push_str(&format!("cy={}\n", camera.cy()));
    out.push_str(&format!("width={}\n", camera.width()));
    out.push_str(&format!("height={}\n", camera.height()));
    out.push_str(&format!("depth_min={}\n", camera.depth_min()));
    out.push_str(&format!("depth_max={}\n", camera.depth_max()));
    let mut push_opt = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push_str(&format!("{key}={v}\n"));
        }
    };
    push_opt("m_radar", defaults.m_radar.map(|v| v.to_string()));
    push_opt("m_cam", defaults.m_cam.map(|v| v.to_string()));
    push_opt("phi_min", defaults.phi_min.map(|v| v.to_string()));
    push_opt("phi_max", defaults.phi_max.map(|v| v.to_string()));
    push_opt("theta_min", defaults.theta_min.map(|v| v.to_string()));
    push_opt("theta_max", defaults.theta_max.map(|v| v.to_string()));
    push_opt("n_phi", defaults.n_phi.map(|v| v.to_string()));
    push_opt("k_theta", defaults.k_theta.map(|v| v.to_string()));
    push_opt("bins", defaults.bins.map(|v| v.to_string()));
    push_opt("log_compress", defaults.log_compress.map(|v| if v { "1".into() } else { "0".into() }));
    push_opt("threshold", defaults.threshold.map(|v| v.to_string()));
    for f in frames {
        let mut line = f.id.clone();
        if let Some(p) = &f.radar_cloud {
            line.push_str(&format!("\tradar_cloud={p}"));
        }
        if let Some(p) = &f.radar_depth {
            line.push_str(&format!("\tradar_depth={p}"));
        }
        line.push_str(&format!("\tmask={}", f.mask));
        if let Some(p) = &f.gt_cloud {
            line.push_str(&format!("\tgt_cloud={p}"));
        }
        if let Some(p) = &f.gt_depth {
            line.push_str(&format!("\tgt_depth={p}"));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Loads and fully validates a manifest; no partial results.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let root = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let err = |line: usize, msg: String| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut header: Vec<(usize, String, String)> = Vec::new();
    let mut records: Vec<(usize, Vec<String>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if line.contains('\t') {
            records.push((line_no, line.split('\t').map(str::to_string).collect()));
        } else if let Some((key, value)) = line.split_once('=') {
            header.push((line_no, key.trim().to_string(), value.trim().to_string()));
        } else {
            return Err(err(
                line_no,
                format!("expected key=value or a tab-separated frame record, got {line:?}"),
            ));
        }
    }

    // ── Header ──
    let mut fx = None;
    let mut fy = None;
    let mut cx = None;
    let mut cy = None;
    let mut width = None;
    let mut height = None;
    let mut depth_min = None;
    let mut depth_max = None;
    let mut defaults = EncodingOverrides::default();
    let mut seen = BTreeSet::new();
    for (line_no, key, value) in &header {
        let line_no = *line_no;
        if !seen.insert(key.clone()) {
            return Err(err(line_no, format!("duplicate header key {key}")));
        }
        let as_f64 = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| err(line_no, format!("{key}: expected a number, got {value:?}")))
        };
        let as_usize = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("{key}: expected an integer, got {value:?}")))
        };
        match key.as_str() {
            "fx" => fx = Some(as_f64()?),
            "fy" => fy = Some(as_f64()?),
            "cx" => cx = Some(as_f64()?),
            "cy" => cy = Some(as_f64()?),
            "width" => width = Some(as_usize()?),
            "height" => height = Some(as_usize()?),
            "depth_min" => depth_min = Some(as_f64()?),
            "depth_max" => depth_max = Some(as_f64()?),
            "m_radar" => defaults.m_radar = Some(as_usize()?),
            "m_cam" => defaults.m_cam = Some(as_usize()?),
            "phi_min" => defaults.phi_min = Some(as_f64()?),
            "phi_max" => defaults.phi_max = Some(as_f64()?),
            "theta_min" => defaults.theta_min = Some(as_f64()?),
            "theta_max" => defaults.theta_max = Some(as_f64()?),
            "n_phi" => defaults.n_phi = Some(as_usize()?),
            "k_theta" => defaults.k_theta = Some(as_usize()?),
            "bins" => defaults.bins = Some(as_usize()?),
            "threshold" => defaults.threshold = Some(as_f64()?),
            "log_compress" => {
                defaults.log_compress = Some(match value.as_str() {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    other => {
                        return Err(err(
                            line_no,
                            format!("log_compress: expected 1/0/true/false, got {other:?}"),
                        ))
                    }
                })
            }
            other => return Err(err(line_no, format!("unknown header key {other}"))),
        }
    }

    let mut missing_keys = Vec::new();
    for (name, present) in [
        ("fx", fx.is_some()),
        ("fy", fy.is_some()),
        ("cx", cx.is_some()),
        ("cy", cy.is_some()),
        ("width", width.is_some()),
        ("height", height.is_some()),
        ("depth_min", depth_min.is_some()),
        ("depth_max", depth_max.is_some()),
    ] {
        if !present {
            missing_keys.push(name);
        }
    }
    if !missing_keys.is_empty() {
        return Err(err(0, format!("missing camera header keys: {}", missing_keys.join(", "))));
    }
    let camera = CameraModel::new(
        fx.unwrap(),
        fy.unwrap(),
        cx.unwrap(),
        cy.unwrap(),
        width.unwrap(),
        height.unwrap(),
        depth_min.unwrap(),
        depth_max.unwrap(),
    )
    .map_err(|e| err(0, format!("camera model: {e}")))?;

    // ── Frame records ──
    let mut frames = Vec::with_capacity(records.len());
    let mut ids = BTreeSet::new();
    for (line_no, fields) in records {
        let id = fields[0].trim().to_string();
        if id.is_empty() {
            return Err(err(line_no, "empty frame id".into()));
        }
        // Frame ids become artifact file names, so keep them path-safe.
        if !id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
            || id.starts_with('.')
        {
            return Err(err(
                line_no,
                format!("frame id {id:?} must be alphanumeric/._- and not start with a dot"),
            ));
        }
        if !ids.insert(id.clone()) {
            return Err(err(line_no, format!("duplicate frame id {id}")));
        }
        let mut radar_cloud = None;
        let mut radar_depth = None;
        let mut mask = None;
        let mut gt_cloud = None;
        let mut gt_depth = None;
        for field in &fields[1..] {
            let (key, value) = field.split_once('=').ok_or_else(|| {
                err(line_no, format!("frame {id}: expected key=path, got {field:?}"))
            })?;
            if value.is_empty() {
                return Err(err(line_no, format!("frame {id}: empty path for {key}")));
            }
            let slot = match key {
                "radar_cloud" => &mut radar_cloud,
                "radar_depth" => &mut radar_depth,
                "mask" => &mut mask,
                "gt_cloud" => &mut gt_cloud,
                "gt_depth" => &mut gt_depth,
                other => {
                    return Err(err(line_no, format!("frame {id}: unknown field {other}")))
                }
            };
            if slot.is_some() {
                return Err(err(line_no, format!("frame {id}: duplicate field {key}")));
            }
            *slot = Some(root.join(value));
        }
        let radar = match (radar_cloud, radar_depth) {
            (Some(p), None) => RadarData::Cloud(p),
            (None, Some(p)) => RadarData::Depth(p),
            (Some(_), Some(_)) => {
                return Err(err(
                    line_no,
                    format!("frame {id}: radar_cloud and radar_depth are mutually exclusive"),
                ))
            }
            (None, None) => {
                return Err(err(
                    line_no,
                    format!("frame {id}: needs exactly one of radar_cloud/radar_depth"),
                ))
            }
        };
        let mask = mask
            .ok_or_else(|| err(line_no, format!("frame {id}: missing required field mask")))?;
        frames.push(FrameEntry { id, radar, mask, gt_cloud, gt_depth });
    }

    // ── Existence check: report every missing file at once ──
    let mut missing = Vec::new();
    for frame in &frames {
        let radar_path = match &frame.radar {
            RadarData::Cloud(p) | RadarData::Depth(p) => p,
        };
        for p in [Some(radar_path), Some(&frame.mask), frame.gt_cloud.as_ref(), frame.gt_depth.as_ref()]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                missing.push(p.clone());
            }
        }
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingFiles(missing));
    }

    Ok(Manifest { root, camera, frames, defaults })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::TempDir;

    fn touch(dir: &Path, rel: &str) {
        let p = dir.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, "stub").unwrap();
    }

    fn base_header() -> &'static str {
        "fx=40\nfy=40\ncx=31.5\ncy=23.5\nwidth=64\nheight=48\ndepth_min=1\ndepth_max=30\n"
    }

    #[test]
    fn well_formed_manifest_loads_every_frame() {
        let dir = TempDir::new().unwrap();
        for i in 0..3 {
            touch(dir.path(), &format!("f/{i}.radar.csv"));
            touch(dir.path(), &format!("f/{i}.mask.csv"));
        }
        touch(dir.path(), "f/0.gt.csv");
        let text = format!(
            "{}m_radar=10\nlog_compress=0\n\
             a\tradar_cloud=f/0.radar.csv\tmask=f/0.mask.csv\tgt_cloud=f/0.gt.csv\n\
             b\tradar_depth=f/1.radar.csv\tmask=f/1.mask.csv\n\
             c\tradar_cloud=f/2.radar.csv\tmask=f/2.mask.csv\n",
            base_header()
        );
        let mpath = dir.path().join("manifest.txt");
        fs::write(&mpath, text).unwrap();
        let m = load_manifest(&mpath).unwrap();
        assert_eq!(m.frames.len(), 3);
        assert_eq!(m.camera.width(), 64);
        assert_eq!(m.defaults.m_radar, Some(10));
        assert_eq!(m.defaults.log_compress, Some(false));
        assert_eq!(m.defaults.m_cam, None);
        assert!(matches!(m.frames[0].radar, RadarData::Cloud(_)));
        assert!(matches!(m.frames[1].radar, RadarData::Depth(_)));
        assert!(m.frames[0].has_ground_truth());
        assert!(!m.frames[1].has_ground_truth());
        assert_eq!(m.frames[2].id, "c");
    }

    #[test]
    fn missing_files_are_all_reported_at_once() {
        let dir = TempDir::new().unwrap();
        touch(dir.path(), "have.radar.csv");
        let text = format!(
            "{}x\tradar_cloud=have.radar.csv\tmask=gone.mask.csv\tgt_depth=gone.gt.csv\n",
            base_header()
        );
        let mpath = dir.path().join("manifest.txt");
        fs::write(&mpath, text).unwrap();
        match load_manifest(&mpath) {
            Err(PipelineError::MissingFiles(files)) => {
                assert_eq!(files.len(), 2);
                let names: Vec<String> = files
                    .iter()
                    .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                    .collect();
                assert!(names.contains(&"gone.mask.csv".to_string()));
                assert!(names.contains(&"gone.gt.csv".to_string()));
            }
            other => panic!("expected MissingFiles, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_frame_ids_are_cited() {
        let dir = TempDir::new().unwrap();
        touch(dir.path(), "a.csv");
        touch(dir.path(), "b.csv");
        let text = format!(
            "{}x\tradar_cloud=a.csv\tmask=b.csv\nx\tradar_cloud=a.csv\tmask=b.csv\n",
            base_header()
        );
        let mpath = dir.path().join("m.txt");
        fs::write(&mpath, text).unwrap();
        match load_manifest(&mpath) {
            Err(PipelineError::Parse { line, msg, .. }) => {
                assert_eq!(line, 10);
                assert!(msg.contains("duplicate frame id x"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_records_and_headers_fail_with_context() {
        let dir = TempDir::new().unwrap();
        let mpath = dir.path().join("m.txt");

        fs::write(&mpath, format!("{}bogus_key=1\n", base_header())).unwrap();
        assert!(matches!(
            load_manifest(&mpath),
            Err(PipelineError::Parse { line: 9, .. })
        ));

        fs::write(&mpath, "fx=40\n").unwrap();
        match load_manifest(&mpath) {
            Err(PipelineError::Parse { msg, .. }) => {
                assert!(msg.contains("missing camera header keys"), "{msg}");
                assert!(msg.contains("fy"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        touch(dir.path(), "a.csv");
        fs::write(&mpath, format!("{}x\tmask=a.csv\n", base_header())).unwrap();
        match load_manifest(&mpath) {
            Err(PipelineError::Parse { msg, .. }) => {
                assert!(msg.contains("radar_cloud/radar_depth"), "{msg}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        fs::write(
            &mpath,
            format!("{}x\tradar_cloud=a.csv\tradar_depth=a.csv\tmask=a.csv\n", base_header()),
        )
        .unwrap();
        match load_manifest(&mpath) {
            Err(PipelineError::Parse { msg, .. }) => {
                assert!(msg.contains("mutually exclusive"), "{msg}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        fs::write(&mpath, "not a header line\n").unwrap();
        assert!(matches!(
            load_manifest(&mpath),
            Err(PipelineError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn writer_and_loader_round_trip() {
        let dir = TempDir::new().unwrap();
        touch(dir.path(), "f/a.radar.csv");
        touch(dir.path(), "f/a.mask.csv");
        touch(dir.path(), "f/a.gt_depth.csv");
        let camera = CameraModel::new(40.0, 41.0, 31.5, 23.5, 64, 48, 1.0, 30.0).unwrap();
        let defaults = EncodingOverrides {
            m_radar: Some(10),
            m_cam: Some(50),
            n_phi: Some(32),
            k_theta: Some(32),
            log_compress: Some(true),
            ..Default::default()
        };
        let records = vec![FrameRecord {
            id: "a".into(),
            radar_cloud: Some("f/a.radar.csv".into()),
            mask: "f/a.mask.csv".into(),
            gt_depth: Some("f/a.gt_depth.csv".into()),
            ..Default::default()
        }];
        let text = manifest_to_string(&camera, &defaults, &records);
        let mpath = dir.path().join("manifest.txt");
        fs::write(&mpath, &text).unwrap();
        let m = load_manifest(&mpath).unwrap();
        assert_eq!(m.camera, camera);
        assert_eq!(m.defaults, defaults);
        assert_eq!(m.frames.len(), 1);
        assert_eq!(m.frames[0].id, "a");
        assert_eq!(m.frames[0].gt_depth, Some(dir.path().join("f/a.gt_depth.csv")));
    }
}
