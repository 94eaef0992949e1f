//! Self-checking tensor container used for checkpoints and imported weights.
//!
//! Layout: 8-byte magic `IEGANTF1`, `u64` little-endian header length, a JSON
//! header `{"meta": .., "tensors": [{"name", "shape", "offset"}]}`, the tensor
//! payload as little-endian `f32` (offsets relative to the payload start), and
//! a SHA-256 digest of everything before it.

use std::path::Path;

use indexmap::IndexMap;
use iegan_tensor::Tensor;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CoreError, Result};

pub const MAGIC: &[u8; 8] = b"IEGANTF1";
const DIGEST_LEN: usize = 32;
const WHAT: &str = "tensor file";

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: serde_json::Value,
    tensors: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorFile {
    pub meta: serde_json::Value,
    pub tensors: IndexMap<String, Tensor<f32>>,
}

impl TensorFile {
    pub fn new(meta: serde_json::Value) -> Self {
        TensorFile { meta, tensors: IndexMap::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0u64;
        let entries = self
            .tensors
            .iter()
            .map(|(name, t)| {
                let e = Entry { name: name.clone(), shape: t.shape().to_vec(), offset };
                offset += 4 * t.len() as u64;
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header { meta: self.meta.clone(), tensors: entries })
            .expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + offset as usize + DIGEST_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.tensors.values() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 + DIGEST_LEN {
            return Err(CoreError::format(WHAT, bytes.len() as u64, "file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(CoreError::format(WHAT, 0, "bad magic"));
        }
        let body = bytes.len() - DIGEST_LEN;
        if Sha256::digest(&bytes[..body]).as_slice() != &bytes[body..] {
            return Err(CoreError::format(WHAT, body as u64, "checksum mismatch"));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let header_end = 16u64
            .checked_add(header_len)
            .filter(|&e| e <= body as u64)
            .ok_or_else(|| CoreError::format(WHAT, 8, format!("header length {header_len} exceeds file")))?
            as usize;
        let header: Header = serde_json::from_slice(&bytes[16..header_end])
            .map_err(|e| CoreError::format(WHAT, 16 + e.column() as u64, format!("header: {e}")))?;
        let payload = &bytes[header_end..body];
        let mut tensors = IndexMap::new();
        let mut expected = 0u64;
        for e in header.tensors {
            let abs = header_end as u64 + e.offset;
            if e.offset != expected {
                return Err(CoreError::format(WHAT, abs, format!("tensor {} at unexpected offset", e.name)));
            }
            let len: usize = e.shape.iter().product();
            let end = e.offset as usize + 4 * len;
            if end > payload.len() {
                return Err(CoreError::format(WHAT, abs, format!("tensor {} runs past the payload", e.name)));
            }
            let data = payload[e.offset as usize..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            let t = Tensor::new(&e.shape, data)
                .map_err(|err| CoreError::format(WHAT, abs, format!("tensor {}: {err}", e.name)))?;
            if tensors.insert(e.name.clone(), t).is_some() {
                return Err(CoreError::format(WHAT, abs, format!("duplicate tensor {}", e.name)));
            }
            expected = end as u64;
        }
        if expected != payload.len() as u64 {
            return Err(CoreError::format(WHAT, header_end as u64 + expected, "trailing payload bytes"));
        }
        Ok(TensorFile { meta: header.meta, tensors })
    }

    /// Writes via a sibling temporary file and a rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("partial");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| CoreError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CoreError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CoreError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
