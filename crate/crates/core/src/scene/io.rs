//! `binary_splat` and `json_splat` readers and writers.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! header: magic "B3SP" | version u32 = 1 | count u32 | flags u32 (bit0: labels)
//! record: mean f32x3 | scale f32x3 | rotation f32x4 (w,x,y,z) | opacity f32 | color f32x3 | [label u32]
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Gaussian, Scene, SceneError};
use crate::geometry::{Quat, Vec3};
use crate::real::Real;

pub const BINARY_MAGIC: [u8; 4] = *b"B3SP";
pub const BINARY_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const FLOATS_PER_RECORD: usize = 14;
const FLAG_LABELS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplatFormat {
    BinarySplat,
    JsonSplat,
}

impl SplatFormat {
    /// Picks a format from the file extension: `.json` is JSON, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::JsonSplat,
            _ => Self::BinarySplat,
        }
    }
}

pub fn load_scene<T: Real>(path: &Path, format: SplatFormat) -> Result<Scene<T>, SceneError> {
    let bytes = fs::read(path).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scene")
        .to_string();
    let gaussians = match format {
        SplatFormat::BinarySplat => decode_binary(&bytes)?,
        SplatFormat::JsonSplat => decode_json(&bytes)?,
    };
    Scene::new(id, gaussians)
}

pub fn save_scene<T: Real>(
    scene: &Scene<T>,
    path: &Path,
    format: SplatFormat,
) -> Result<(), SceneError> {
    let bytes = match format {
        SplatFormat::BinarySplat => encode_binary(scene)?,
        SplatFormat::JsonSplat => encode_json(scene),
    };
    fs::write(path, bytes).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn encode_binary<T: Real>(scene: &Scene<T>) -> Result<Vec<u8>, SceneError> {
    let labeled = scene
        .gaussians()
        .iter()
        .filter(|g| g.gt_label.is_some())
        .count();
    if labeled != 0 && labeled != scene.len() {
        return Err(SceneError::Encode(format!(
            "binary splat needs labels on all or none of the gaussians ({labeled} of {} labeled)",
            scene.len()
        )));
    }
    let with_labels = labeled == scene.len();
    let record = FLOATS_PER_RECORD * 4 + if with_labels { 4 } else { 0 };
    let mut out = Vec::with_capacity(HEADER_LEN + record * scene.len());
    out.extend_from_slice(&BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&(scene.len() as u32).to_le_bytes());
    let flags = if with_labels { FLAG_LABELS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for g in scene.gaussians() {
        let floats = g
            .mean
            .to_array()
            .into_iter()
            .chain(g.scale.to_array())
            .chain(g.rotation.to_array())
            .chain(std::iter::once(g.opacity))
            .chain(g.color);
        for v in floats {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
        if let Some(label) = g.gt_label.filter(|_| with_labels) {
            out.extend_from_slice(&label.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, SceneError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| SceneError::Parse {
            offset,
            message: "unexpected end of file".into(),
        })
}

fn decode_binary<T: Real>(bytes: &[u8]) -> Result<Vec<Gaussian<T>>, SceneError> {
    if bytes.len() < HEADER_LEN {
        return Err(SceneError::Parse {
            offset: bytes.len(),
            message: format!("header needs {HEADER_LEN} bytes"),
        });
    }
    if bytes[..4] != BINARY_MAGIC {
        return Err(SceneError::Parse {
            offset: 0,
            message: "bad magic, expected \"B3SP\"".into(),
        });
    }
    let version = read_u32(bytes, 4)?;
    if version != BINARY_VERSION {
        return Err(SceneError::Parse {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let count = read_u32(bytes, 8)? as usize;
    let flags = read_u32(bytes, 12)?;
    if flags & !FLAG_LABELS != 0 {
        return Err(SceneError::Parse {
            offset: 12,
            message: format!("unknown flag bits {flags:#x}"),
        });
    }
    let with_labels = flags & FLAG_LABELS != 0;
    let record = FLOATS_PER_RECORD * 4 + if with_labels { 4 } else { 0 };
    let expected = HEADER_LEN + count * record;
    if bytes.len() != expected {
        let offset = if bytes.len() < expected {
            HEADER_LEN + (bytes.len() - HEADER_LEN) / record * record
        } else {
            expected
        };
        return Err(SceneError::Parse {
            offset,
            message: format!(
                "file holds {} bytes, header declares {count} records ({expected} bytes)",
                bytes.len()
            ),
        });
    }

    let mut gaussians = Vec::with_capacity(count);
    for i in 0..count {
        let base = HEADER_LEN + i * record;
        let f = |k: usize| {
            let o = base + 4 * k;
            T::lit(f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64)
        };
        let gt_label = if with_labels {
            Some(read_u32(bytes, base + FLOATS_PER_RECORD * 4)?)
        } else {
            None
        };
        gaussians.push(Gaussian {
            mean: Vec3::new(f(0), f(1), f(2)),
            scale: Vec3::new(f(3), f(4), f(5)),
            rotation: Quat::new(f(6), f(7), f(8), f(9)),
            opacity: f(10),
            color: [f(11), f(12), f(13)],
            gt_label,
        });
    }
    Ok(gaussians)
}

#[derive(Serialize, Deserialize)]
struct JsonScene {
    version: u32,
    gaussians: Vec<JsonGaussian>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGaussian {
    mean: [f64; 3],
    scale: [f64; 3],
    rot: [f64; 4],
    opacity: f64,
    color: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u32>,
}

fn encode_json<T: Real>(scene: &Scene<T>) -> Vec<u8> {
    let doc = JsonScene {
        version: 1,
        gaussians: scene
            .gaussians()
            .iter()
            .map(|g| JsonGaussian {
                mean: g.mean.to_array().map(Real::as_f64),
                scale: g.scale.to_array().map(Real::as_f64),
                rot: g.rotation.to_array().map(Real::as_f64),
                opacity: g.opacity.as_f64(),
                color: g.color.map(Real::as_f64),
                label: g.gt_label,
            })
            .collect(),
    };
    serde_json::to_vec_pretty(&doc).expect("scene serializes to JSON")
}

/// Byte offset of a 1-based (line, column) position.
fn byte_offset(text: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (n, l) in text.split(|&b| b == b'\n').enumerate() {
        if n + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len() + 1;
    }
    text.len()
}

fn decode_json<T: Real>(bytes: &[u8]) -> Result<Vec<Gaussian<T>>, SceneError> {
    let doc: JsonScene = serde_json::from_slice(bytes).map_err(|e| SceneError::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    if doc.version != 1 {
        return Err(SceneError::Parse {
            offset: 0,
            message: format!("unsupported version {}", doc.version),
        });
    }
    Ok(doc
        .gaussians
        .into_iter()
        .map(|g| Gaussian {
            mean: Vec3::from_array(g.mean.map(T::lit)),
            scale: Vec3::from_array(g.scale.map(T::lit)),
            rotation: Quat::from_array(g.rot.map(T::lit)),
            opacity: T::lit(g.opacity),
            color: g.color.map(T::lit),
            gt_label: g.label,
        })
        .collect())
}
