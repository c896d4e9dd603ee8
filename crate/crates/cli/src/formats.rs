//! On-disk formats: CSV grids, CSV point clouds, ASCII PGM rasters, and the
//! tensor checkpoint container.
//!
//! Every writer goes through [`atomic_write`] (temp file + rename), so a
//! killed run never leaves a truncated artifact under the final name.
//! Floats are written with Rust's shortest round-trip formatting — stable
//! across runs and platforms — and `NaN` is spelled `nan` so degenerate
//! metric cells are greppable and re-parseable.
//!
//! Grid files are dispatched on extension: `.csv` for exact values (the
//! default everywhere) and `.pgm` for 16-bit previews and interchange. The
//! PGM writer records its normalization constants in a `# range` comment
//! line; the reader inverts that mapping, and treats a PGM *without* the
//! comment as carrying raw integer values (exact for class masks).

use std::fs;
use std::path::Path;

use spatspec_core::{PixelGrid, PointCloud};

use crate::error::{PipelineError, Result};

/// Maximum pixel value in PGM previews.
const PGM_MAXVAL: u32 = 65535;
/// Magic first line of the checkpoint container.
const CHECKPOINT_MAGIC: &str = "SPATSPEC-TENSORS v1";

// ── Float formatting ────────────────────────────────────────────────────────

/// Shortest round-trip representation; `NaN` becomes the literal `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_f64(token: &str, path: &Path, line: usize) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected a number, got {token:?}"),
    })
}

fn parse_usize(token: &str, path: &Path, line: usize) -> Result<usize> {
    token.trim().parse::<usize>().map_err(|_| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected a non-negative integer, got {token:?}"),
    })
}

// ── Atomic writes ───────────────────────────────────────────────────────────

/// Writes `bytes` to `path` via a temporary sibling file and an atomic
/// rename. The temporary name derives from the final one, so concurrent
/// writes to *different* paths never collide.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

// ── Grid CSV ────────────────────────────────────────────────────────────────

/// Serializes a grid as CSV: the literal header `rows,cols`, a dimension
/// line, then one comma-separated row per grid row.
pub fn grid_to_csv(grid: &PixelGrid) -> String {
    let mut out = String::new();
    out.push_str("rows,cols\n");
    out.push_str(&format!("{},{}\n", grid.rows(), grid.cols()));
    for r in 0..grid.rows() {
        let row: Vec<String> = grid.row(r).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_grid_csv(path: &Path, grid: &PixelGrid) -> Result<()> {
    atomic_write(path, grid_to_csv(grid).as_bytes())
}

pub fn read_grid_csv(path: &Path) -> Result<PixelGrid> {
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "rows,cols" {
        return Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header \"rows,cols\", got {header:?}"),
        });
    }
    let dims = lines.next().ok_or_else(|| PipelineError::Parse {
        path: path.to_path_buf(),
        line: 2,
        msg: "missing dimension line".into(),
    })?;
    let mut parts = dims.split(',');
    let rows = parse_usize(parts.next().unwrap_or(""), path, 2)?;
    let cols = parse_usize(parts.next().unwrap_or(""), path, 2)?;
    if parts.next().is_some() {
        return Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: 2,
            msg: "dimension line must be exactly \"rows,cols\" values".into(),
        });
    }
    let mut values = Vec::with_capacity(rows.saturating_mul(cols));
    for r in 0..rows {
        let line_no = 3 + r;
        let line = lines.next().ok_or_else(|| PipelineError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("expected {rows} data rows, file ends after {r}"),
        })?;
        let mut count = 0;
        for token in line.split(',') {
            values.push(parse_f64(token, path, line_no)?);
            count += 1;
        }
        if count != cols {
            return Err(PipelineError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected {cols} columns, got {count}"),
            });
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("trailing content after {rows} data rows: {extra:?}"),
        });
    }
    PixelGrid::new(rows, cols, values).map_err(|e| PipelineError::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

// ── Point cloud CSV ─────────────────────────────────────────────────────────

/// Serializes a cloud as CSV with header `x,y,z`, one point per line, meters.
pub fn cloud_to_csv(cloud: &PointCloud) -> String {
    let mut out = String::from("x,y,z\n");
    for p in cloud.iter() {
        out.push_str(&format!("{},{},{}\n", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])));
    }
    out
}

pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    atomic_write(path, cloud_to_csv(cloud).as_bytes())
}

pub fn read_cloud_csv(path: &Path) -> Result<PointCloud> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().unwrap_or((0, ""));
    if header.trim() != "x,y,z" {
        return Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header \"x,y,z\", got {header:?}"),
        });
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(PipelineError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        points.push([
            parse_f64(fields[0], path, line_no)?,
            parse_f64(fields[1], path, line_no)?,
            parse_f64(fields[2], path, line_no)?,
        ]);
    }
    PointCloud::new(points).map_err(|e| PipelineError::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

// ── ASCII PGM ───────────────────────────────────────────────────────────────

/// Serializes a grid as 16-bit ASCII PGM (P2), min-max normalized with the
/// normalization constants pinned in a `# range min=<a> max=<b>` comment so
/// the mapping inverts on read.
pub fn grid_to_pgm(grid: &PixelGrid) -> String {
    let (min, max) = (grid.min_value(), grid.max_value());
    let span = max - min;
    let mut out = String::from("P2\n");
    out.push_str(&format!("# range min={} max={}\n", fmt_f64(min), fmt_f64(max)));
    out.push_str(&format!("{} {}\n{}\n", grid.cols(), grid.rows(), PGM_MAXVAL));
    for r in 0..grid.rows() {
        let row: Vec<String> = grid
            .row(r)
            .iter()
            .map(|&v| {
                let q = if span > 0.0 {
                    ((v - min) / span * PGM_MAXVAL as f64).round() as u32
                } else {
                    0
                };
                q.to_string()
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_grid_pgm(path: &Path, grid: &PixelGrid) -> Result<()> {
    atomic_write(path, grid_to_pgm(grid).as_bytes())
}

pub fn read_grid_pgm(path: &Path) -> Result<PixelGrid> {
    let text = read_to_string(path)?;
    let parse_err = |line: usize, msg: String| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    // Collect the range comment (if any) and the non-comment tokens.
    let mut range: Option<(f64, f64)> = None;
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(comment) = line.trim().strip_prefix('#') {
            let fields: Vec<&str> = comment.split_whitespace().collect();
            if fields.len() == 3 && fields[0] == "range" {
                let min = fields[1].strip_prefix("min=").map(str::trim);
                let max = fields[2].strip_prefix("max=").map(str::trim);
                if let (Some(min), Some(max)) = (min, max) {
                    range = Some((
                        parse_f64(min, path, line_no)?,
                        parse_f64(max, path, line_no)?,
                    ));
                }
            }
            continue;
        }
        for token in line.split_whitespace() {
            tokens.push((line_no, token));
        }
    }

    let mut it = tokens.into_iter();
    let (line_no, magic) = it.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    if magic != "P2" {
        return Err(parse_err(line_no, format!("expected magic P2, got {magic:?}")));
    }
    let mut take = |what: &str| -> Result<usize> {
        let (line_no, token) =
            it.next().ok_or_else(|| parse_err(0, format!("missing {what}")))?;
        parse_usize(token, path, line_no)
    };
    let cols = take("width")?;
    let rows = take("height")?;
    let maxval = take("maxval")?;
    if maxval == 0 {
        return Err(parse_err(0, "maxval must be positive".into()));
    }
    let mut values = Vec::with_capacity(rows.saturating_mul(cols));
    for _ in 0..rows * cols {
        let (line_no, token) = it
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {} pixels", rows * cols)))?;
        let raw = parse_usize(token, path, line_no)?;
        if raw > maxval {
            return Err(parse_err(line_no, format!("pixel {raw} exceeds maxval {maxval}")));
        }
        let v = match range {
            Some((min, max)) => min + raw as f64 / maxval as f64 * (max - min),
            None => raw as f64,
        };
        values.push(v);
    }
    if it.next().is_some() {
        return Err(parse_err(0, format!("trailing pixels after {}", rows * cols)));
    }
    PixelGrid::new(rows, cols, values).map_err(|e| parse_err(0, e.to_string()))
}

/// Reads a grid file, dispatching on the `.csv` / `.pgm` extension.
pub fn read_grid(path: &Path) -> Result<PixelGrid> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_grid_csv(path),
        Some("pgm") => read_grid_pgm(path),
        other => Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("unsupported grid extension {other:?} (expected csv or pgm)"),
        }),
    }
}

// ── Checkpoint container ────────────────────────────────────────────────────

/// Serializes named tensors: a text header (magic line, one
/// `tensor <name> <dim>...` line each, a `data` line) followed by the
/// concatenated raw little-endian f64 values in header order.
pub fn checkpoint_to_bytes(tensors: &[(String, Vec<usize>, Vec<f64>)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC.as_bytes());
    out.push(b'\n');
    for (name, shape, _) in tensors {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        out.extend_from_slice(format!("tensor {name} {}\n", dims.join(" ")).as_bytes());
    }
    out.extend_from_slice(b"data\n");
    for (_, _, values) in tensors {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_checkpoint(path: &Path, tensors: &[(String, Vec<usize>, Vec<f64>)]) -> Result<()> {
    atomic_write(path, &checkpoint_to_bytes(tensors))
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<(String, Vec<usize>, Vec<f64>)>> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let parse_err = |line: usize, msg: String| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    // Consume text lines up to and including "data"; the payload starts at
    // the byte after that line's newline.
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut header_lines: Vec<(usize, String)> = Vec::new();
    loop {
        line_no += 1;
        let rest = &bytes[offset..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(line_no, "unexpected end of header".into()))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| parse_err(line_no, "header is not UTF-8".into()))?
            .to_string();
        offset += nl + 1;
        if line == "data" {
            break;
        }
        header_lines.push((line_no, line));
    }

    let mut header = header_lines.into_iter();
    let (magic_line, magic) =
        header.next().ok_or_else(|| parse_err(1, "missing magic line".into()))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(parse_err(magic_line, format!("expected {CHECKPOINT_MAGIC:?}, got {magic:?}")));
    }
    let mut tensors: Vec<(String, Vec<usize>, usize)> = Vec::new();
    for (line_no, line) in header {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 || fields[0] != "tensor" {
            return Err(parse_err(line_no, format!("expected \"tensor <name> <dims...>\", got {line:?}")));
        }
        let name = fields[1].to_string();
        let mut shape = Vec::new();
        for dim in &fields[2..] {
            shape.push(parse_usize(dim, path, line_no)?);
        }
        let count = shape.iter().product::<usize>();
        tensors.push((name, shape, count));
    }

    let payload = &bytes[offset..];
    let total: usize = tensors.iter().map(|(_, _, c)| c).sum();
    if payload.len() != total * 8 {
        return Err(parse_err(
            0,
            format!("payload is {} bytes, header promises {}", payload.len(), total * 8),
        ));
    }
    let mut out = Vec::with_capacity(tensors.len());
    let mut pos = 0;
    for (name, shape, count) in tensors {
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let chunk: [u8; 8] = payload[pos..pos + 8].try_into().expect("length checked");
            values.push(f64::from_le_bytes(chunk));
            pos += 8;
        }
        out.push((name, shape, values));
    }
    Ok(out)
}

// ── Tests ───────────────────────────────────────────────────────────────────
