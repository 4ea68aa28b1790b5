//! Denoiser checkpoints: 8-byte magic, little-endian `u64` header length,
//! JSON header (training config and tensor layout), then every parameter as
//! a little-endian `f32`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ParamStore, TensorSpec, ToyDenoiser};
use super::train::TrainConfig;
use crate::{Error, Real, Result};

pub const MAGIC: &[u8; 8] = b"AUSCDDPM";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub version: u32,
    pub train: TrainConfig,
    pub tensors: Vec<TensorSpec>,
}

pub fn encode<T: Real>(model: &ToyDenoiser<T>, train: &TrainConfig) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        version: VERSION,
        train: TrainConfig {
            denoiser: model.config().clone(),
            ..train.clone()
        },
        tensors: model.params().specs().to_vec(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 4 * model.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in model.params().values() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode<T: Real>(bytes: &[u8]) -> Result<(ToyDenoiser<T>, TrainConfig)> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a denoiser checkpoint (bad magic)"));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes
        .get(16..16usize.saturating_add(header_len))
        .ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(body)?;
    if header.version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", header.version)));
    }
    let data = &bytes[16 + header_len..];
    let count: usize = header.tensors.iter().map(TensorSpec::numel).sum();
    if data.len() != 4 * count {
        return Err(Error::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            4 * count,
            data.len()
        )));
    }
    let values = data
        .chunks_exact(4)
        .map(|b| T::lit(f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes")))))
        .collect();
    let params = ParamStore::from_values(header.tensors, values)?;
    let model = ToyDenoiser::from_params(header.train.denoiser.clone(), params)?;
    Ok((model, header.train))
}

/// Writes through a temporary file and renames it into place.
pub fn save<T: Real>(path: &Path, model: &ToyDenoiser<T>, train: &TrainConfig) -> Result<()> {
    let bytes = encode(model, train)?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load<T: Real>(path: &Path) -> Result<(ToyDenoiser<T>, TrainConfig)> {
    decode(&fs::read(path)?)
}
