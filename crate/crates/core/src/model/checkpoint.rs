use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TrainConfig};
use super::network::Network;
use super::train::EpochRecord;
use crate::error::{Error, Result};
use crate::nn::{Parameterized, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MSRCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

/// A trained (or freshly initialized) model with its training record.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// In [`Network`] parameter order.
    pub params: Vec<Tensor>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Element offset into the blob.
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    seed: u64,
    model: ModelConfig,
    train: TrainConfig,
    best_epoch: usize,
    history: Vec<EpochRecord>,
    tensors: Vec<TensorEntry>,
}

impl Checkpoint {
    pub fn new(
        model: ModelConfig,
        train: TrainConfig,
        params: Vec<Tensor>,
        history: Vec<EpochRecord>,
        best_epoch: usize,
    ) -> Result<Self> {
        let ckpt = Self {
            model,
            train,
            params,
            history,
            best_epoch,
        };
        ckpt.network()?;
        Ok(ckpt)
    }

    pub fn seed(&self) -> u64 {
        self.model.seed
    }

    /// Rebuilds the network, checking every tensor shape against the config.
    pub fn network(&self) -> Result<Network> {
        let mut net = Network::new(self.model.clone())?;
        let names = net.param_names();
        let slots = net.params_mut();
        if slots.len() != self.params.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, config needs {}",
                self.params.len(),
                slots.len()
            )));
        }
        for ((slot, p), name) in slots.into_iter().zip(&self.params).zip(&names) {
            if slot.shape != p.shape {
                return Err(Error::Config(format!(
                    "tensor {name} has shape {:?}, config needs {:?}",
                    p.shape, slot.shape
                )));
            }
            slot.data.copy_from_slice(&p.data);
        }
        Ok(net)
    }

    /// Magic, little-endian u64 header length, JSON header, then every
    /// tensor as little-endian f64 in parameter order.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let names = Network::new(self.model.clone())?.param_names();
        let mut offset = 0;
        let tensors = self
            .params
            .iter()
            .zip(names)
            .map(|(p, name)| {
                let e = TensorEntry {
                    name,
                    shape: p.shape.clone(),
                    offset,
                };
                offset += p.len();
                e
            })
            .collect();
        let header = Header {
            format_version: FORMAT_VERSION,
            seed: self.model.seed,
            model: self.model.clone(),
            train: self.train.clone(),
            best_epoch: self.best_epoch,
            history: self.history.clone(),
            tensors,
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(16 + json.len() + offset * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &self.params {
            for v in &p.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let json = bytes
            .get(16..16usize.saturating_add(len))
            .ok_or_else(|| Error::Format("truncated checkpoint header".into()))?;
        let raw: serde_json::Value = serde_json::from_slice(json).map_err(|e| Error::Format(e.to_string()))?;
        let version = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Format("checkpoint header lacks format_version".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(Error::Incompatible {
                found: version as u32,
                expected: FORMAT_VERSION,
            });
        }
        let header: Header = serde_json::from_value(raw).map_err(|e| Error::Format(e.to_string()))?;
        let blob = &bytes[16 + len..];
        let total: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        if blob.len() != total * 8 {
            return Err(Error::Format(format!(
                "tensor blob has {} bytes, header describes {}",
                blob.len(),
                total * 8
            )));
        }
        let params = header
            .tensors
            .iter()
            .map(|t| {
                let n: usize = t.shape.iter().product();
                let start = t.offset * 8;
                let chunk = blob
                    .get(start..start + n * 8)
                    .ok_or_else(|| Error::Format(format!("tensor {} lies outside the blob", t.name)))?;
                let data = chunk
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect();
                Tensor::from_vec(&t.shape, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(header.model, header.train, params, header.history, header.best_epoch)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Loads and requires the stored model config to equal `expected`.
    pub fn load_for(path: &Path, expected: &ModelConfig) -> Result<Self> {
        let ckpt = Self::load(path)?;
        if &ckpt.model != expected {
            return Err(Error::Config(format!(
                "checkpoint {} was trained with a different model config",
                path.display()
            )));
        }
        Ok(ckpt)
    }
}
