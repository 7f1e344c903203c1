//! Checkpoints: `checkpoint.json` (architecture plus a name → shape/offset
//! index) next to `weights.bin`, which follows the corpus header layout with
//! magic `EERW` and an f64 payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelGraph, ModelTag, NnError, Parameter, Tensor};
use crate::seed::sha256_hex;

pub const WEIGHTS_MAGIC: [u8; 4] = *b"EERW";
pub const INDEX_FILE: &str = "checkpoint.json";
pub const WEIGHTS_FILE: &str = "weights.bin";
const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointIndex {
    pub format_version: u32,
    pub tag: ModelTag,
    pub channels: usize,
    pub feature_dim: usize,
    pub classes: usize,
    pub hidden: Vec<usize>,
    pub params: Vec<ParamEntry>,
    pub weights_sha256: String,
}

fn encode_weights(model: &ModelGraph) -> Vec<u8> {
    let total = model.num_params();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * total);
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for p in &model.params {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint(model: &ModelGraph, dir: &Path) -> Result<(), NnError> {
    fs::create_dir_all(dir)?;
    let weights = encode_weights(model);
    let mut offset = 0;
    let params = model
        .params
        .iter()
        .map(|p| {
            let e = ParamEntry { name: p.name.clone(), shape: p.value.shape().to_vec(), offset };
            offset += p.value.len();
            e
        })
        .collect();
    let index = CheckpointIndex {
        format_version: 1,
        tag: model.tag,
        channels: model.channels,
        feature_dim: model.feature_dim,
        classes: model.classes,
        hidden: model.hidden.clone(),
        params,
        weights_sha256: sha256_hex(&weights),
    };
    fs::write(dir.join(WEIGHTS_FILE), &weights)?;
    let mut json = serde_json::to_string_pretty(&index).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join(INDEX_FILE), json)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<ModelGraph, NnError> {
    let text = fs::read_to_string(dir.join(INDEX_FILE))?;
    let index: CheckpointIndex = serde_json::from_str(&text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let bytes = fs::read(dir.join(WEIGHTS_FILE))?;
    if sha256_hex(&bytes) != index.weights_sha256 {
        return Err(NnError::Checkpoint("weights do not match the index checksum".into()));
    }
    if bytes.len() < HEADER_LEN || bytes[..4] != WEIGHTS_MAGIC {
        return Err(NnError::Checkpoint("weights file has no EERW header".into()));
    }
    let total = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * total {
        return Err(NnError::Checkpoint(format!("payload has {} bytes, header implies {}", payload.len(), 8 * total)));
    }
    let values: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let params = index
        .params
        .iter()
        .map(|e| {
            let n: usize = e.shape.iter().product();
            let slice = values
                .get(e.offset..e.offset + n)
                .ok_or_else(|| NnError::Checkpoint(format!("parameter {} runs past the payload", e.name)))?;
            Ok(Parameter { name: e.name.clone(), value: Tensor::new(e.shape.clone(), slice.to_vec())? })
        })
        .collect::<Result<Vec<_>, NnError>>()?;
    Ok(ModelGraph {
        tag: index.tag,
        channels: index.channels,
        feature_dim: index.feature_dim,
        classes: index.classes,
        hidden: index.hidden,
        params,
    })
}
