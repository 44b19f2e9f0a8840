//! Named parameter tensors with paired gradient buffers and optimizer
//! state, plus the binary checkpoint format.
//!
//! Checkpoints are a single-line UTF-8 JSON header (parameter names,
//! shapes, byte offsets, and caller metadata) followed by raw
//! little-endian 64-bit float arrays. Round trips are bit-exact.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{DiffError, Tensor};

/// One named parameter: value, gradient, and lazily allocated Adam
/// moment buffers.
#[derive(Debug, Clone)]
pub struct Param<F> {
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
    pub(super) moment1: Option<Tensor<F>>,
    pub(super) moment2: Option<Tensor<F>>,
}

/// Named dense parameters; iteration order is the sorted name order, so
/// checkpoints and optimizer sweeps are deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore<F> {
    params: BTreeMap<String, Param<F>>,
    pub(super) adam_steps: u64,
}

impl<F: Scalar> ParameterStore<F> {
    pub fn new() -> Self {
        ParameterStore {
            params: BTreeMap::new(),
            adam_steps: 0,
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<F>) -> Result<(), DiffError> {
        if self.params.contains_key(name) {
            return Err(DiffError::DuplicateParameter(name.to_string()));
        }
        let grad = Tensor::zeros(value.rows(), value.cols());
        self.params.insert(
            name.to_string(),
            Param {
                value,
                grad,
                moment1: None,
                moment2: None,
            },
        );
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    /// Total number of scalar entries across all parameters.
    pub fn num_entries(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<F>, DiffError> {
        self.params
            .get(name)
            .map(|p| &p.value)
            .ok_or_else(|| DiffError::UnknownParameter(name.to_string()))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor<F>, DiffError> {
        self.params
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| DiffError::UnknownParameter(name.to_string()))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor<F>, DiffError> {
        self.params
            .get(name)
            .map(|p| &p.grad)
            .ok_or_else(|| DiffError::UnknownParameter(name.to_string()))
    }

    pub fn accumulate_grad(&mut self, name: &str, delta: &Tensor<F>) -> Result<(), DiffError> {
        let param = self
            .params
            .get_mut(name)
            .ok_or_else(|| DiffError::UnknownParameter(name.to_string()))?;
        param.grad.add_scaled(delta, F::one())
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(F::zero());
        }
    }

    pub(super) fn params_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param<F>)> {
        self.params.iter_mut()
    }

    /// Serializes all parameter values plus caller metadata. The header
    /// (one JSON line) lists every parameter's shape and byte offset
    /// into the payload that follows.
    pub fn save(
        &self,
        w: &mut impl Write,
        meta: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<(), DiffError> {
        let mut entries = Vec::new();
        let mut offset = 0usize;
        for (name, p) in &self.params {
            entries.push(HeaderParam {
                name: name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                offset,
            });
            offset += p.value.len() * 8;
        }
        let header = Header {
            version: CHECKPOINT_VERSION,
            meta: meta.clone(),
            params: entries,
        };
        let header_json =
            serde_json::to_string(&header).map_err(|e| DiffError::Checkpoint(e.to_string()))?;
        w.write_all(header_json.as_bytes())?;
        w.write_all(b"\n")?;
        for p in self.params.values() {
            for &v in p.value.data() {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a checkpoint produced by [`ParameterStore::save`].
    pub fn load(
        r: &mut impl Read,
    ) -> Result<(ParameterStore<F>, serde_json::Map<String, serde_json::Value>), DiffError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| DiffError::Checkpoint("missing header line".into()))?;
        let header: Header = serde_json::from_slice(&bytes[..newline])
            .map_err(|e| DiffError::Checkpoint(format!("bad header: {e}")))?;
        if header.version != CHECKPOINT_VERSION {
            return Err(DiffError::Checkpoint(format!(
                "unsupported version {}",
                header.version
            )));
        }
        let payload = &bytes[newline + 1..];
        let mut store = ParameterStore::new();
        for entry in &header.params {
            let len = entry.rows * entry.cols;
            let end = entry.offset + len * 8;
            if end > payload.len() {
                return Err(DiffError::Checkpoint(format!(
                    "truncated payload: parameter `{}` needs {} bytes, have {}",
                    entry.name,
                    end,
                    payload.len()
                )));
            }
            let mut data = Vec::with_capacity(len);
            for chunk in payload[entry.offset..end].chunks_exact(8) {
                let raw: [u8; 8] = chunk.try_into().expect("chunks_exact yields 8 bytes");
                data.push(F::cast(f64::from_le_bytes(raw)));
            }
            store.insert(&entry.name, Tensor::from_vec(entry.rows, entry.cols, data)?)?;
        }
        Ok((store, header.meta))
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    meta: serde_json::Map<String, serde_json::Value>,
    params: Vec<HeaderParam>,
}

#[derive(Serialize, Deserialize)]
struct HeaderParam {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
}
