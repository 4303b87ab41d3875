//! Binary checkpoints.
//!
//! Layout: the magic `CALAV1`, the header length as a little-endian `u64`,
//! a JSON header, then every tensor as little-endian `f64` in row-major
//! order. Header offsets count bytes from the start of the data section.

use std::path::Path;

use calav_core::params::{ImportError, NamedTensor};
use calav_core::trainer::{StateMeta, TrainState};
use calav_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"CALAV1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub version: u32,
    pub vocab_sha256: String,
    pub token_count: usize,
    pub char_count: usize,
    pub config: TrainConfig,
    pub meta: StateMeta,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    Magic,
    #[error("truncated checkpoint")]
    Truncated,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("bad header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("tensor `{0}` lies outside the data section")]
    Layout(String),
    #[error(transparent)]
    Tensor(#[from] ImportError),
}

/// A training state with the configuration and vocabulary it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab_sha256: String,
    pub config: TrainConfig,
    pub state: TrainState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let tensors = self.state.tensors();
        let mut offset = 0u64;
        let entries = tensors
            .iter()
            .map(|t| {
                let e = TensorEntry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    offset,
                };
                offset += 8 * t.data.len() as u64;
                e
            })
            .collect();
        let header = Header {
            version: VERSION,
            vocab_sha256: self.vocab_sha256.clone(),
            token_count: self.state.model.tables.word.rows(),
            char_count: self.state.model.tables.chars.rows(),
            config: self.config,
            meta: self.state.meta(),
            tensors: entries,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + offset as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn header(bytes: &[u8]) -> Result<(Header, &[u8]), CheckpointError> {
        let rest = bytes
            .strip_prefix(MAGIC.as_slice())
            .ok_or(CheckpointError::Magic)?;
        if rest.len() < 8 {
            return Err(CheckpointError::Truncated);
        }
        let (len, rest) = rest.split_at(8);
        let len = u64::from_le_bytes(len.try_into().expect("8 bytes")) as usize;
        if rest.len() < len {
            return Err(CheckpointError::Truncated);
        }
        let (json, data) = rest.split_at(len);
        let header: Header = serde_json::from_slice(json)?;
        if header.version != VERSION {
            return Err(CheckpointError::Version(header.version));
        }
        Ok((header, data))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let (header, data) = Self::header(bytes)?;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        let mut end = 0usize;
        for e in &header.tensors {
            let n: usize = e.shape.iter().product();
            let start = e.offset as usize;
            let stop = start
                .checked_add(8 * n)
                .filter(|&s| s <= data.len())
                .ok_or_else(|| CheckpointError::Layout(e.name.clone()))?;
            let values = data[start..stop]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(NamedTensor {
                name: e.name.clone(),
                shape: e.shape.clone(),
                data: values,
            });
            end = end.max(stop);
        }
        if end != data.len() {
            return Err(CheckpointError::Layout("<trailing bytes>".into()));
        }
        let state = TrainState::from_tensors(
            &header.config.model,
            header.token_count,
            header.char_count,
            &tensors,
            &header.meta,
        )?;
        Ok(Self {
            vocab_sha256: header.vocab_sha256,
            config: header.config,
            state,
        })
    }

    /// Write through a temporary file so an interrupted save never leaves a
    /// partial checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(Error::io(&tmp))?;
        std::fs::rename(&tmp, path).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(Error::io(path))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            CheckpointError::Version(_) => Error::Consistency(format!("{}: {e}", path.display())),
            _ => Error::Input(format!("{}: {e}", path.display())),
        })
    }
}
