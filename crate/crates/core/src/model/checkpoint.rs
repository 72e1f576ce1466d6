use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::Array2;
use safetensors::tensor::{Dtype, SafeTensors, TensorView};
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ViscNet};
use crate::nn::Module;
use crate::{Error, Result};

// A single header key keeps the serialized header byte-stable.
const HEADER_KEY: &str = "viscnet";

#[derive(Serialize, Deserialize)]
struct Header {
    model_config: ModelConfig,
    meta: BTreeMap<String, String>,
}

fn ckpt_err(path: &Path, message: impl ToString) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

impl ViscNet {
    /// Named f32 tensors plus string metadata; the model config travels in
    /// the header next to the metadata.
    pub fn to_bytes(&self, meta: &BTreeMap<String, String>) -> Result<Vec<u8>> {
        let mut buffers: Vec<(String, Vec<usize>, Vec<u8>)> = Vec::new();
        self.visit("", &mut |name, p| {
            let bytes = p.value.iter().flat_map(|v| v.to_le_bytes()).collect();
            buffers.push((name.to_string(), p.value.shape().to_vec(), bytes));
        });
        let views = buffers
            .iter()
            .map(|(n, shape, data)| {
                TensorView::new(Dtype::F32, shape.clone(), data)
                    .map(|v| (n.clone(), v))
                    .map_err(|e| Error::Checkpoint {
                        path: n.into(),
                        message: e.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let header = Header {
            model_config: self.config,
            meta: meta.clone(),
        };
        let info = HashMap::from([(HEADER_KEY.to_string(), serde_json::to_string(&header)?)]);
        safetensors::serialize(views, &Some(info)).map_err(|e| Error::Checkpoint {
            path: "<memory>".into(),
            message: e.to_string(),
        })
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<(Self, BTreeMap<String, String>)> {
        let (_, header) = SafeTensors::read_metadata(bytes).map_err(|e| ckpt_err(path, e))?;
        let json = header
            .metadata()
            .as_ref()
            .and_then(|m| m.get(HEADER_KEY))
            .ok_or_else(|| ckpt_err(path, "missing viscnet header metadata"))?;
        let Header {
            model_config: config,
            meta,
        } = serde_json::from_str(json).map_err(|e| ckpt_err(path, e))?;
        let tensors = SafeTensors::deserialize(bytes).map_err(|e| ckpt_err(path, e))?;
        let mut net = ViscNet::new(config)?;
        let mut failure = None;
        let mut loaded = 0usize;
        net.visit_mut("", &mut |name, p| {
            if failure.is_some() {
                return;
            }
            match tensors.tensor(name) {
                Ok(t) if t.dtype() == Dtype::F32 && t.shape() == p.value.shape() => {
                    let vals: Vec<f32> = t
                        .data()
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                        .collect();
                    p.value = Array2::from_shape_vec(p.value.raw_dim(), vals).expect("shape checked");
                    loaded += 1;
                }
                Ok(t) => {
                    failure = Some(format!(
                        "tensor `{name}` has shape {:?}, expected {:?}",
                        t.shape(),
                        p.value.shape()
                    ))
                }
                Err(_) => failure = Some(format!("missing tensor `{name}`")),
            }
        });
        if let Some(f) = failure {
            return Err(ckpt_err(path, f));
        }
        if loaded != tensors.len() {
            return Err(ckpt_err(path, format!("{} unexpected tensors", tensors.len() - loaded)));
        }
        Ok((net, meta))
    }

    pub fn save(&self, path: &Path, meta: &BTreeMap<String, String>) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bytes = self.to_bytes(meta)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, BTreeMap<String, String>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
