//! Model checkpoints.
//!
//! Layout: the magic line `USRL1\n`, a little-endian `u32` header length,
//! a UTF-8 JSON header, then the little-endian `f32` payload of every
//! tensor at the offset its directory entry names (relative to the start
//! of the payload). Models trained in high precision are narrowed to `f32`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srl_core::corpus::LabelInventory;
use srl_core::embedder::{EmbedderSpec, EmbeddingCache};
use srl_core::model::{ModelConfig, ModelError, SrlModel};
use srl_core::numerics::{Real, Tensor};

use crate::error::{Error, Result};
use crate::files::load_embedder_cache;

pub const MAGIC: &[u8; 6] = b"USRL1\n";
pub const VERSION: u32 = 1;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated: needs {needed} bytes, has {found}")]
    Truncated { needed: usize, found: usize },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("tensor {0:?} missing from checkpoint")]
    MissingTensor(String),
    #[error("tensor {0:?} is not a parameter of the model")]
    UnknownTensor(String),
    #[error("tensor {name:?} has shape {found:?}, model expects {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("unsupported dtype {0:?}")]
    Dtype(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the payload.
    pub offset: usize,
    /// Byte length.
    pub length: usize,
}

/// Training facts stored alongside the parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub dev_f1: Option<f64>,
    pub train_sentences: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub model: ModelConfig,
    pub embedder: EmbedderSpec,
    pub inventories: Vec<LabelInventory>,
    pub tensors: Vec<TensorEntry>,
    pub payload_length: usize,
    pub metadata: CheckpointMeta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub tensors: BTreeMap<String, Tensor<f32>>,
}

pub fn encode<R: Real>(model: &SrlModel<R>, meta: &CheckpointMeta) -> Vec<u8> {
    let mut payload = Vec::new();
    let mut tensors = Vec::new();
    for p in model.params().iter() {
        let offset = payload.len();
        for v in p.value.data() {
            payload.extend_from_slice(&v.as_f32().to_le_bytes());
        }
        tensors.push(TensorEntry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            dtype: "f32".into(),
            offset,
            length: payload.len() - offset,
        });
    }
    let header = Header {
        version: VERSION,
        model: model.config().clone(),
        embedder: model.embedder().spec().clone(),
        inventories: model.inventories().cloned().collect(),
        tensors,
        payload_length: payload.len(),
        metadata: meta.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    out
}

fn need(bytes: &[u8], needed: usize) -> Result<(), CheckpointError> {
    if bytes.len() < needed {
        Err(CheckpointError::Truncated {
            needed,
            found: bytes.len(),
        })
    } else {
        Ok(())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if !bytes.starts_with(MAGIC) {
        return Err(if MAGIC.starts_with(bytes) && bytes.len() < MAGIC.len() {
            CheckpointError::Truncated {
                needed: MAGIC.len(),
                found: bytes.len(),
            }
        } else {
            CheckpointError::BadMagic
        });
    }
    let mut pos = MAGIC.len();
    need(bytes, pos + 4)?;
    let header_len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
    pos += 4;
    need(bytes, pos + header_len)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes[pos..pos + header_len]).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let header: Header = serde_json::from_value(value).map_err(|e| CheckpointError::Header(e.to_string()))?;
    pos += header_len;
    need(bytes, pos + header.payload_length)?;
    let payload = &bytes[pos..pos + header.payload_length];

    let mut tensors = BTreeMap::new();
    for t in &header.tensors {
        if t.dtype != "f32" {
            return Err(CheckpointError::Dtype(t.dtype.clone()));
        }
        let count: usize = t.shape.iter().product();
        let end = t.offset.checked_add(t.length);
        let Some(raw) = end.filter(|_| t.length == 4 * count).and_then(|end| payload.get(t.offset..end)) else {
            return Err(CheckpointError::MissingTensor(t.name.clone()));
        };
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = Tensor::from_vec(&t.shape, data).expect("length checked against shape");
        tensors.insert(t.name.clone(), tensor);
    }
    Ok(Checkpoint { header, tensors })
}

impl Checkpoint {
    /// Rebuilds the model and installs the stored parameters. Every model
    /// parameter must be present with its exact shape.
    pub fn into_model(self, cache: Option<EmbeddingCache>) -> Result<SrlModel<f32>, CheckpointError> {
        let Checkpoint { header, mut tensors } = self;
        let mut model = SrlModel::<f32>::new(header.model, &header.embedder, &header.inventories, cache)?;
        let names: Vec<String> = model.params().names().map(String::from).collect();
        for name in names {
            let stored = tensors
                .remove(&name)
                .ok_or_else(|| CheckpointError::MissingTensor(name.clone()))?;
            let id = model.params().id(&name).expect("name from the store");
            let slot = model.params_mut().value_mut(id);
            if slot.shape() != stored.shape() {
                return Err(CheckpointError::ShapeMismatch {
                    name,
                    expected: slot.shape().to_vec(),
                    found: stored.shape().to_vec(),
                });
            }
            *slot = stored;
        }
        if let Some(name) = tensors.into_keys().next() {
            return Err(CheckpointError::UnknownTensor(name));
        }
        Ok(model)
    }
}

fn checkpoint_error(path: &Path, source: CheckpointError) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_checkpoint<R: Real>(model: &SrlModel<R>, meta: &CheckpointMeta, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, encode(model, meta)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| checkpoint_error(path, e))
}

/// Reads a checkpoint and rebuilds its model, loading embedding caches the
/// provider refers to.
pub fn load_checkpoint(path: &Path) -> Result<(SrlModel<f32>, Header)> {
    let checkpoint = read_checkpoint(path)?;
    let header = checkpoint.header.clone();
    let cache = load_embedder_cache(&header.embedder)?;
    let model = checkpoint.into_model(cache).map_err(|e| checkpoint_error(path, e))?;
    Ok((model, header))
}
