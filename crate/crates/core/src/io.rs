//! Scan bundles on disk, configuration files, and reports.
//!
//! A bundle is a directory:
//!
//! ```text
//! manifest.json          scan id, units, intrinsics, per-frame file names and instance tables
//! frame_0000.depth       "FDEPTH1\n<w> <h>\n<invalid sentinel>\n" + little-endian f32 raster
//! frame_0000.pgm         16-bit binary PGM (P5, maxval 65535) of instance labels
//! frame_0000.pose        4x4 camera-to-world matrix, row-major decimal text
//! ground_truth.json      optional
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraFrame, CameraIntrinsics, DepthImage, GeometryError, Instance, MaskImage, RigidTransform};
use crate::simulator::{GroundTruth, SimulationConfig};

pub const BUNDLE_FORMAT: &str = "fruitlet-scan-bundle";
pub const BUNDLE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
const DEPTH_MAGIC: &str = "FDEPTH1";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("frame {frame}: missing file {path}")]
    MissingFile { frame: u32, path: PathBuf },
    #[error("frame {frame}: {path}: truncated or malformed ({message})")]
    Malformed { frame: u32, path: PathBuf, message: String },
    #[error("frame {frame}: dimension mismatch: {message}")]
    Dimensions { frame: u32, message: String },
    #[error("frame {frame}: invalid pose: {source}")]
    Pose {
        frame: u32,
        #[source]
        source: GeometryError,
    },
    #[error("frame {frame}: invalid mask: {source}")]
    Mask {
        frame: u32,
        #[source]
        source: GeometryError,
    },
    #[error("unsupported units {0:?}; bundles must be in millimetres")]
    Units(String),
    #[error("manifest declares {declared} frames but lists {listed}")]
    FrameCount { declared: usize, listed: usize },
    #[error("frame ids not strictly increasing at frame {0}")]
    FrameOrder(u32),
    #[error("bundle has no ground-truth file")]
    NoGroundTruth,
    #[error("{0}")]
    Invalid(String),
}

impl BundleError {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            BundleError::Io { .. } => "io",
            BundleError::Parse { .. } => "parse",
            BundleError::MissingFile { .. } => "missing_file",
            BundleError::Malformed { .. } => "malformed_file",
            BundleError::Dimensions { .. } => "dimension_mismatch",
            BundleError::Pose { .. } => "invalid_pose",
            BundleError::Mask { .. } => "invalid_mask",
            BundleError::Units(_) => "unit_mismatch",
            BundleError::FrameCount { .. } => "frame_count",
            BundleError::FrameOrder(_) => "frame_order",
            BundleError::NoGroundTruth => "no_ground_truth",
            BundleError::Invalid(_) => "invalid",
        }
    }

    /// Offending frame, when the error is tied to one.
    pub fn frame(&self) -> Option<u32> {
        match self {
            BundleError::MissingFile { frame, .. }
            | BundleError::Malformed { frame, .. }
            | BundleError::Dimensions { frame, .. }
            | BundleError::Pose { frame, .. }
            | BundleError::Mask { frame, .. }
            | BundleError::FrameOrder(frame) => Some(*frame),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub frame_id: u32,
    pub depth: String,
    pub mask: String,
    pub pose: String,
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub scan_id: String,
    pub units: String,
    pub frame_count: usize,
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<FrameEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    /// Simulator configuration that produced the bundle, if synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanBundle {
    pub manifest: Manifest,
    pub frames: Vec<CameraFrame>,
    pub ground_truth: Option<GroundTruth>,
}

pub fn encode_depth(depth: &DepthImage) -> Vec<u8> {
    let mut out = format!("{DEPTH_MAGIC}\n{} {}\n{}\n", depth.width(), depth.height(), crate::geometry::INVALID_DEPTH)
        .into_bytes();
    out.reserve(depth.values().len() * 4);
    for v in depth.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Splits `n` newline-terminated header lines off the front of `bytes`.
fn header_lines(bytes: &[u8], n: usize) -> Option<(Vec<&str>, &[u8])> {
    let mut lines = Vec::with_capacity(n);
    let mut rest = bytes;
    for _ in 0..n {
        let pos = rest.iter().position(|&b| b == b'\n')?;
        lines.push(std::str::from_utf8(&rest[..pos]).ok()?.trim());
        rest = &rest[pos + 1..];
    }
    Some((lines, rest))
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthImage, String> {
    let (lines, body) = header_lines(bytes, 3).ok_or("missing header")?;
    if lines[0] != DEPTH_MAGIC {
        return Err(format!("bad magic {:?}", lines[0]));
    }
    let (w, h) = parse_dims(lines[1])?;
    let sentinel: f32 = lines[2].parse().map_err(|_| format!("bad sentinel {:?}", lines[2]))?;
    let n = w as usize * h as usize;
    if body.len() != n * 4 {
        return Err(format!("expected {} raster bytes, found {}", n * 4, body.len()));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if v == sentinel {
                crate::geometry::INVALID_DEPTH
            } else {
                v
            }
        })
        .collect();
    DepthImage::new(w, h, values).map_err(|e| e.to_string())
}

fn parse_dims(line: &str) -> Result<(u32, u32), String> {
    let mut it = line.split_whitespace().map(str::parse::<u32>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(w)), Some(Ok(h)), None) => Ok((w, h)),
        _ => Err(format!("bad dimensions {line:?}")),
    }
}

pub fn encode_mask_pgm(mask: &MaskImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", mask.width(), mask.height()).into_bytes();
    out.reserve(mask.labels().len() * 2);
    for l in mask.labels() {
        out.extend_from_slice(&l.to_be_bytes());
    }
    out
}

/// Decodes a 16-bit P5 graymap. Comments are not supported.
pub fn decode_mask_pgm(bytes: &[u8]) -> Result<(u32, u32, Vec<u16>), String> {
    let (lines, body) = header_lines(bytes, 3).ok_or("missing header")?;
    if lines[0] != "P5" {
        return Err(format!("bad magic {:?}", lines[0]));
    }
    let (w, h) = parse_dims(lines[1])?;
    if lines[2] != "65535" {
        return Err(format!("expected maxval 65535, found {:?}", lines[2]));
    }
    let n = w as usize * h as usize;
    if body.len() != n * 2 {
        return Err(format!("expected {} raster bytes, found {}", n * 2, body.len()));
    }
    Ok((w, h, body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

pub fn encode_pose(pose: &RigidTransform) -> String {
    pose.to_rows()
        .iter()
        .map(|row| row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}

pub fn decode_pose(text: &str) -> Result<Matrix4<f64>, String> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<Result<_, _>>()?;
    if values.len() != 16 {
        return Err(format!("expected 16 values, found {}", values.len()));
    }
    Ok(Matrix4::from_row_slice(&values))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BundleError> {
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BundleError> {
    write_file(path, to_json(value).as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BundleError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| BundleError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes frames (and optional ground truth) as a bundle directory.
pub fn write_bundle(
    dir: &Path,
    scan_id: &str,
    frames: &[CameraFrame],
    ground_truth: Option<&GroundTruth>,
    simulation: Option<&SimulationConfig>,
) -> Result<Manifest, BundleError> {
    let intrinsics = frames
        .first()
        .map(|f| f.intrinsics)
        .ok_or_else(|| BundleError::Invalid("cannot write a bundle with no frames".into()))?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::with_capacity(frames.len());
    for f in frames {
        if f.intrinsics != intrinsics {
            return Err(BundleError::Dimensions {
                frame: f.frame_id,
                message: "all frames in a bundle must share intrinsics".into(),
            });
        }
        let stem = format!("frame_{:04}", f.frame_id);
        let entry = FrameEntry {
            frame_id: f.frame_id,
            depth: format!("{stem}.depth"),
            mask: format!("{stem}.pgm"),
            pose: format!("{stem}.pose"),
            instances: f.masks.instances().to_vec(),
        };
        write_file(&dir.join(&entry.depth), &encode_depth(&f.depth))?;
        write_file(&dir.join(&entry.mask), &encode_mask_pgm(&f.masks))?;
        write_file(&dir.join(&entry.pose), encode_pose(&f.pose).as_bytes())?;
        entries.push(entry);
    }
    if let Some(gt) = ground_truth {
        write_json(&dir.join(GROUND_TRUTH_FILE), gt)?;
    }
    let manifest = Manifest {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        scan_id: scan_id.into(),
        units: "mm".into(),
        frame_count: entries.len(),
        intrinsics,
        frames: entries,
        ground_truth: ground_truth.map(|_| GROUND_TRUTH_FILE.into()),
        simulation: simulation.copied(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn read_frame_file(dir: &Path, frame: u32, name: &str) -> Result<Vec<u8>, BundleError> {
    let path = dir.join(name);
    match fs::read(&path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(BundleError::MissingFile { frame, path }),
        Err(source) => Err(BundleError::Io { path, source }),
    }
}

fn load_frame(dir: &Path, entry: &FrameEntry, intrinsics: &CameraIntrinsics) -> Result<CameraFrame, BundleError> {
    let frame = entry.frame_id;
    let malformed = |name: &str, message: String| BundleError::Malformed {
        frame,
        path: dir.join(name),
        message,
    };
    let depth = decode_depth(&read_frame_file(dir, frame, &entry.depth)?).map_err(|m| malformed(&entry.depth, m))?;
    let (mw, mh, labels) =
        decode_mask_pgm(&read_frame_file(dir, frame, &entry.mask)?).map_err(|m| malformed(&entry.mask, m))?;
    let pose_text = String::from_utf8(read_frame_file(dir, frame, &entry.pose)?)
        .map_err(|_| malformed(&entry.pose, "not UTF-8 text".into()))?;
    let pose = decode_pose(&pose_text).map_err(|m| malformed(&entry.pose, m))?;
    let pose = RigidTransform::from_matrix4(&pose).map_err(|source| BundleError::Pose { frame, source })?;

    let k = (intrinsics.width, intrinsics.height);
    if (depth.width(), depth.height()) != k || (mw, mh) != k {
        return Err(BundleError::Dimensions {
            frame,
            message: format!(
                "depth {}x{}, mask {mw}x{mh}, intrinsics {}x{}",
                depth.width(),
                depth.height(),
                k.0,
                k.1
            ),
        });
    }
    let masks = MaskImage::new(mw, mh, labels, entry.instances.clone()).map_err(|source| BundleError::Mask { frame, source })?;
    Ok(CameraFrame {
        frame_id: frame,
        intrinsics: *intrinsics,
        pose,
        depth,
        masks,
    })
}

/// Loads and validates a bundle directory.
pub fn read_bundle(dir: &Path) -> Result<ScanBundle, BundleError> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.format != BUNDLE_FORMAT {
        return Err(BundleError::Invalid(format!("unknown bundle format {:?}", manifest.format)));
    }
    if manifest.units != "mm" {
        return Err(BundleError::Units(manifest.units.clone()));
    }
    if manifest.frame_count != manifest.frames.len() {
        return Err(BundleError::FrameCount {
            declared: manifest.frame_count,
            listed: manifest.frames.len(),
        });
    }
    manifest
        .intrinsics
        .validate()
        .map_err(|e| BundleError::Invalid(e.to_string()))?;
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for entry in &manifest.frames {
        frames.push(load_frame(dir, entry, &manifest.intrinsics)?);
    }
    frames.sort_by_key(|f| f.frame_id);
    for w in frames.windows(2) {
        if w[0].frame_id == w[1].frame_id {
            return Err(BundleError::FrameOrder(w[1].frame_id));
        }
    }
    let ground_truth = match &manifest.ground_truth {
        Some(name) => Some(read_json::<GroundTruth>(&dir.join(name))?),
        None => None,
    };
    Ok(ScanBundle {
        manifest,
        frames,
        ground_truth,
    })
}
