//! Binary container shared by language-model and classifier checkpoints.
//!
//! Layout: the magic `CLM1`, a little-endian `u64` metadata length, the
//! metadata as UTF-8 JSON, every tensor as little-endian `f32` values in the
//! order listed in the metadata, and finally a little-endian `u64` FNV-1a
//! checksum of everything between the magic and the checksum.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 3] = b"CLM";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt checkpoint payload: {0}")]
    CorruptPayload(String),
    #[error("checkpoint holds a {found} artifact, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error("invalid checkpoint metadata: {0}")]
    Metadata(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Serialize, Deserialize)]
struct Header<B> {
    format_version: u32,
    kind: String,
    tensors: Vec<TensorSpec>,
    body: B,
}

/// Decoded container: typed metadata body plus named tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Container<B> {
    pub kind: String,
    pub body: B,
    pub tensors: Vec<(TensorSpec, Vec<f32>)>,
}

impl<B> Container<B> {
    pub fn tensor(&self, name: &str) -> Option<&[f32]> {
        self.tensors
            .iter()
            .find(|(s, _)| s.name == name)
            .map(|(_, d)| d.as_slice())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn encode<B: Serialize>(kind: &str, body: &B, tensors: &[(TensorSpec, &[f32])]) -> Result<Vec<u8>, ArtifactError> {
    for (spec, data) in tensors {
        if spec.len() != data.len() {
            return Err(ArtifactError::Metadata(format!(
                "tensor {} declares {} values but holds {}",
                spec.name,
                spec.len(),
                data.len()
            )));
        }
    }
    let header = Header {
        format_version: FORMAT_VERSION as u32,
        kind: kind.to_string(),
        tensors: tensors.iter().map(|(s, _)| s.clone()).collect(),
        body,
    };
    let meta = serde_json::to_vec(&header).map_err(|e| ArtifactError::Metadata(e.to_string()))?;
    let total: usize = tensors.iter().map(|(_, d)| d.len()).sum();
    let mut out = Vec::with_capacity(4 + 8 + meta.len() + 4 * total + 8);
    out.extend_from_slice(MAGIC);
    out.push(b'0' + FORMAT_VERSION);
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    for (_, data) in tensors {
        for v in *data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = fnv1a64(&out[4..]);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

pub fn decode<B: DeserializeOwned>(bytes: &[u8], expected_kind: &str) -> Result<Container<B>, ArtifactError> {
    if bytes.len() < 4 || &bytes[..3] != MAGIC {
        return Err(ArtifactError::BadMagic);
    }
    let version = bytes[3].wrapping_sub(b'0');
    if version != FORMAT_VERSION {
        return Err(ArtifactError::VersionMismatch {
            found: version as u32,
            expected: FORMAT_VERSION as u32,
        });
    }
    if bytes.len() < 4 + 8 + 8 {
        return Err(ArtifactError::CorruptPayload("file is truncated".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a64(&payload[4..]) != stored {
        return Err(ArtifactError::CorruptPayload("checksum mismatch".into()));
    }
    let meta_len = u64::from_le_bytes(payload[4..12].try_into().expect("8 bytes")) as usize;
    let meta_end = 12usize
        .checked_add(meta_len)
        .filter(|&e| e <= payload.len())
        .ok_or_else(|| ArtifactError::CorruptPayload("metadata length exceeds file".into()))?;
    let header: Header<serde_json::Value> =
        serde_json::from_slice(&payload[12..meta_end]).map_err(|e| ArtifactError::Metadata(e.to_string()))?;
    if header.format_version != FORMAT_VERSION as u32 {
        return Err(ArtifactError::VersionMismatch {
            found: header.format_version,
            expected: FORMAT_VERSION as u32,
        });
    }
    if header.kind != expected_kind {
        return Err(ArtifactError::WrongKind {
            expected: expected_kind.to_string(),
            found: header.kind,
        });
    }
    let body: B = serde_json::from_value(header.body).map_err(|e| ArtifactError::Metadata(e.to_string()))?;
    let mut pos = meta_end;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for spec in header.tensors {
        let end = pos + 4 * spec.len();
        if end > payload.len() {
            return Err(ArtifactError::CorruptPayload(format!("tensor {} is truncated", spec.name)));
        }
        let data = payload[pos..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        pos = end;
        tensors.push((spec, data));
    }
    if pos != payload.len() {
        return Err(ArtifactError::CorruptPayload("trailing bytes after tensors".into()));
    }
    Ok(Container {
        kind: header.kind,
        body,
        tensors,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    fs::write(path, bytes).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, ArtifactError> {
    fs::read(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })
}
