//! Binary checkpoints.
//!
//! Layout: `PGRAPHCK`, format version (u32 LE), header length (u64 LE), a
//! JSON header (training config, scaler, parameter manifest), parameters as
//! f64 LE in manifest order, and a SHA-256 of everything before it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::Scaler;

use super::model::{ModelParams, RgatModel};
use super::train::{TrainConfig, TrainedModel};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"PGRAPHCK";
const DIGEST_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint checksum mismatch (file truncated or corrupted)")]
    Checksum,
    #[error("checkpoint format version {found} is not supported (this build reads version {expected})")]
    Version { found: u32, expected: u32 },
    #[error("not a checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    model: super::ModelConfig,
    scaler: Scaler,
    manifest: Vec<(String, Vec<usize>)>,
}

pub fn checkpoint_bytes(m: &TrainedModel) -> Vec<u8> {
    let header = Header {
        config: m.config.clone(),
        model: m.model.config,
        scaler: m.scaler,
        manifest: m.model.params.named().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect(),
    };
    let header = serde_json::to_vec(&header).expect("headers serialize");
    let mut out = Vec::with_capacity(MAGIC.len() + 12 + header.len() + m.model.params.num_params() * 8 + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for x in m.model.params.flat() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<TrainedModel, CheckpointError> {
    if bytes.len() < MAGIC.len() + 12 + DIGEST_LEN {
        return Err(if bytes.starts_with(&MAGIC[..bytes.len().min(8)]) {
            CheckpointError::Checksum
        } else {
            CheckpointError::Format("file too short".into())
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(CheckpointError::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version { found: version, expected: CHECKPOINT_VERSION });
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(CheckpointError::Checksum);
    }
    let hlen = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let header_end = 20usize.checked_add(hlen).filter(|&e| e <= body.len()).ok_or(CheckpointError::Format("header length out of range".into()))?;
    let header: Header =
        serde_json::from_slice(&body[20..header_end]).map_err(|e| CheckpointError::Format(e.to_string()))?;
    let mut params = ModelParams::zeros(&header.model);
    let expected: Vec<(String, Vec<usize>)> =
        params.named().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
    if expected != header.manifest {
        return Err(CheckpointError::Format("parameter manifest does not match the model config".into()));
    }
    let raw = &body[header_end..];
    if raw.len() != params.num_params() * 8 {
        return Err(CheckpointError::Format("parameter block has the wrong length".into()));
    }
    let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    params.set_flat(&values).map_err(|e| CheckpointError::Format(e.to_string()))?;
    Ok(TrainedModel { model: RgatModel { config: header.model, params }, scaler: header.scaler, config: header.config })
}

pub fn checkpoint_save(m: &TrainedModel, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, checkpoint_bytes(m))?;
    Ok(())
}

pub fn checkpoint_load(path: &Path) -> Result<TrainedModel, CheckpointError> {
    checkpoint_from_bytes(&fs::read(path)?)
}
