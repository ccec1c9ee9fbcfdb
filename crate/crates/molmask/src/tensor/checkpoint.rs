//! Model checkpoints: a JSON manifest plus a flat archive of named
//! parameter blocks with raw little-endian f64 data. Byte-stable for
//! identical parameter values and manifest.

use super::Parameter;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MOLMASK1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("not a checkpoint: bad magic")]
    BadMagic,
    #[error("checkpoint truncated")]
    Truncated,
    #[error("manifest is not valid JSON: {0}")]
    BadManifest(#[from] serde_json::Error),
    #[error("checkpoint has no parameter named '{0}'")]
    MissingParameter(String),
    #[error("parameter '{name}' has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("checkpoint vocabulary {found:?} does not match this build")]
    VocabularyMismatch { found: Vec<String> },
}

/// Model kind, configuration, and the element vocabulary the parameters
/// were trained against.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointManifest {
    pub model: String,
    pub config: serde_json::Value,
    pub vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn from_parameters(manifest: CheckpointManifest, params: &[Parameter]) -> Checkpoint {
        let entries = params
            .iter()
            .map(|p| CheckpointEntry {
                name: p.name().to_string(),
                shape: p.shape().to_vec(),
                values: p.values(),
            })
            .collect();
        Checkpoint { manifest, entries }
    }

    pub fn entry(&self, name: &str) -> Option<&CheckpointEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Copies stored values into matching parameters by name.
    pub fn apply_to(&self, params: &[Parameter]) -> Result<(), CheckpointError> {
        for param in params {
            let entry = self
                .entry(param.name())
                .ok_or_else(|| CheckpointError::MissingParameter(param.name().to_string()))?;
            if entry.shape != param.shape() {
                return Err(CheckpointError::ShapeMismatch {
                    name: param.name().to_string(),
                    expected: param.shape().to_vec(),
                    found: entry.shape.clone(),
                });
            }
            param.set_values(&entry.values);
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest =
            serde_json::to_vec(&self.manifest).expect("manifest serialization cannot fail");
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for entry in &self.entries {
            let name = entry.name.as_bytes();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            out.push(entry.shape.len() as u8);
            for &dim in &entry.shape {
                out.extend_from_slice(&(dim as u32).to_le_bytes());
            }
            for &value in &entry.values {
                out.extend_from_slice(&value.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let mut cursor = Cursor { bytes, pos: 0 };
        if cursor.take(8)? != CHECKPOINT_MAGIC.as_slice() {
            return Err(CheckpointError::BadMagic);
        }
        let manifest_len = cursor.u32()? as usize;
        let manifest: CheckpointManifest = serde_json::from_slice(cursor.take(manifest_len)?)?;
        let count = cursor.u32()? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = cursor.u16()? as usize;
            let name = String::from_utf8_lossy(cursor.take(name_len)?).into_owned();
            let rank = cursor.take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(cursor.u32()? as usize);
            }
            let len: usize = shape.iter().product();
            let mut values = Vec::with_capacity(len);
            for _ in 0..len {
                let raw = cursor.take(8)?;
                values.push(f64::from_le_bytes(raw.try_into().unwrap()));
            }
            entries.push(CheckpointEntry {
                name,
                shape,
                values,
            });
        }
        Ok(Checkpoint { manifest, entries })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Checkpoint::from_bytes(&bytes)
    }
}

/// Returns true when `bytes` begin with the checkpoint magic.
pub(crate) fn looks_like_checkpoint(bytes: &[u8]) -> bool {
    bytes.starts_with(CHECKPOINT_MAGIC)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + len > self.bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
}
