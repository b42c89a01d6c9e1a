//! Model file: 8-byte magic `RTMODEL1`, `u64` header length, JSON header,
//! `u64` parameter count, then the flat parameters as little-endian `f64`
//! in the tensor order listed in the header.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::network::{Network, NetworkConfig};
use super::preprocess::Standardizer;
use super::train::{LstmClassifier, TrainingConfig};

pub const MODEL_MAGIC: &[u8; 8] = b"RTMODEL1";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format_version: u32,
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    pub seed: u64,
    pub standardizer: Standardizer,
    pub tensors: Vec<TensorEntry>,
    pub loss_trace: Vec<f64>,
}

pub fn write_model(model: &LstmClassifier, mut w: impl Write) -> Result<()> {
    let header = ModelHeader {
        format_version: MODEL_FORMAT_VERSION,
        network: model.network.config,
        training: model.training,
        seed: model.training.seed,
        standardizer: model.standardizer.clone(),
        tensors: model
            .network
            .config
            .tensor_layout()
            .into_iter()
            .map(|(name, len, _, _)| TensorEntry { name, len })
            .collect(),
        loss_trace: model.loss_trace.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let io = |e| Error::io("<model writer>", e);
    w.write_all(MODEL_MAGIC).map_err(io)?;
    w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    w.write_all(&(model.network.params.len() as u64).to_le_bytes())
        .map_err(io)?;
    let mut buf = Vec::with_capacity(model.network.params.len() * 8);
    for p in &model.network.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf).map_err(io)
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io("<model reader>", e))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_model(mut r: impl Read) -> Result<LstmClassifier> {
    let io = |e| Error::io("<model reader>", e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a model file".into()));
    }
    let hlen = read_u64(&mut r)? as usize;
    let mut json = vec![0u8; hlen];
    r.read_exact(&mut json).map_err(io)?;
    let version: serde_json::Value = serde_json::from_slice(&json)?;
    match version.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
        other => {
            return Err(Error::Format(format!(
                "model format version {other:?}, expected {MODEL_FORMAT_VERSION}"
            )))
        }
    }
    let header: ModelHeader = serde_json::from_value(version)?;
    let n = read_u64(&mut r)? as usize;
    let listed: usize = header.tensors.iter().map(|t| t.len).sum();
    if listed != n {
        return Err(Error::Format(format!(
            "header lists {listed} parameters, block holds {n}"
        )));
    }
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf).map_err(io)?;
    let params = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let network = Network::from_params(header.network, params)?;
    if header.standardizer.channels() != header.network.input_width() {
        return Err(Error::Format("standardizer width differs from network input".into()));
    }
    Ok(LstmClassifier {
        network,
        standardizer: header.standardizer,
        training: header.training,
        loss_trace: header.loss_trace,
    })
}

pub fn save_model(model: &LstmClassifier, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_model(model, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<LstmClassifier> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(std::io::BufReader::new(f))
}
