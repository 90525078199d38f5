//! Checkpoints are a JSON manifest plus a sibling `.bin` file holding every
//! parameter, in layer order, as little-endian `f32`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Param;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "fuzzvad-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in values (not bytes).
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub blob: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub params: Vec<ParamEntry>,
}

fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

/// Writes `<path>` (manifest) and `<path>` with a `.bin` extension.
pub fn write_checkpoint(path: &Path, seed: u64, config: serde_json::Value, params: &[&Param]) -> Result<()> {
    let blob = blob_path(path);
    let mut bytes = Vec::new();
    let mut entries = Vec::with_capacity(params.len());
    let mut offset = 0;
    for p in params {
        entries.push(ParamEntry {
            name: p.name.clone(),
            shape: p.shape.clone(),
            offset,
        });
        offset += p.len();
        for v in &p.value {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        blob: blob
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        seed,
        config,
        params: entries,
    };
    fs::write(&blob, bytes).map_err(|e| Error::io(&blob, e))?;
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Reads a manifest and its blob, returning the manifest and one value
/// vector per parameter entry.
pub fn read_checkpoint(path: &Path) -> Result<(CheckpointManifest, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unknown checkpoint format {}", manifest.format),
        });
    }
    let blob = path.with_file_name(&manifest.blob);
    let bytes = fs::read(&blob).map_err(|e| Error::io(&blob, e))?;
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let mut out = Vec::with_capacity(manifest.params.len());
    for entry in &manifest.params {
        let len: usize = entry.shape.iter().product();
        let end = entry.offset + len;
        if bytes.len() % 4 != 0 || end > values.len() {
            return Err(Error::Format {
                path: blob.clone(),
                message: format!("blob too short for parameter {}", entry.name),
            });
        }
        out.push(values[entry.offset..end].to_vec());
    }
    Ok((manifest, out))
}
