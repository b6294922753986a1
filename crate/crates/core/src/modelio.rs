//! Binary model files shared by the VAE and the LSTM.
//!
//! Layout: 8 magic bytes, `u32` BE tensor count, then a `(u32 rows, u32 cols)`
//! BE shape table, then every tensor's values row-major as `f64` BE.
//! Hyperparameters live in a JSON sidecar next to the binary
//! (`model.bin` → `model.json`).

use std::path::{Path, PathBuf};

use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"MEDLDGR1";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("file truncated or has trailing bytes")]
    Length,
    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
    #[error("unexpected layout: {0}")]
    Layout(String),
}

pub type Result<T> = std::result::Result<T, ModelIoError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn encode(tensors: &[Tensor]) -> Vec<u8> {
    let total: usize = tensors.iter().map(|t| t.data.len()).sum();
    let mut out = Vec::with_capacity(12 + 8 * tensors.len() + 8 * total);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tensors.len() as u32).to_be_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.rows as u32).to_be_bytes());
        out.extend_from_slice(&(t.cols as u32).to_be_bytes());
    }
    for t in tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Tensor>> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let u32_at = |i: usize| -> Result<usize> {
        bytes
            .get(i..i + 4)
            .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")) as usize)
            .ok_or(ModelIoError::Length)
    };
    let count = u32_at(8)?;
    let mut shapes = Vec::with_capacity(count);
    for k in 0..count {
        shapes.push((u32_at(12 + 8 * k)?, u32_at(16 + 8 * k)?));
    }
    let mut pos = 12 + 8 * count;
    let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
    if bytes.len() != pos + 8 * total {
        return Err(ModelIoError::Length);
    }
    let mut tensors = Vec::with_capacity(count);
    for (rows, cols) in shapes {
        let data = (0..rows * cols)
            .map(|i| f64::from_be_bytes(bytes[pos + 8 * i..pos + 8 * i + 8].try_into().expect("8 bytes")))
            .collect();
        pos += 8 * rows * cols;
        tensors.push(Tensor { rows, cols, data });
    }
    Ok(tensors)
}

pub fn save(path: impl AsRef<Path>, tensors: &[Tensor], sidecar: &serde_json::Value) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, encode(tensors))?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(Vec<Tensor>, serde_json::Value)> {
    let path = path.as_ref();
    let tensors = decode(&std::fs::read(path)?)?;
    let sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    Ok((tensors, sidecar))
}
