use std::fs;
use std::path::{Path, PathBuf};

use selagg_core::ChannelMatrix;
use serde::{Deserialize, Serialize};

use super::{write_file, write_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub n_channels: usize,
    pub n_samples: usize,
    pub sample_rate: f64,
    pub seed: Option<u64>,
}

/// `channels.bin` -> `channels.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Little-endian `f64`, channel-major, plus the JSON sidecar.
pub fn write_matrix(path: &Path, m: &ChannelMatrix, seed: Option<u64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(m.data().len() * 8);
    for v in m.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &bytes)?;
    let meta = MatrixMeta {
        n_channels: m.n_channels(),
        n_samples: m.n_samples(),
        sample_rate: m.sample_rate(),
        seed,
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn read_matrix(path: &Path) -> Result<(ChannelMatrix, MatrixMeta)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: MatrixMeta = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: side.clone(),
        source,
    })?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = meta.n_channels * meta.n_samples * 8;
    if bytes.len() != expected {
        return Err(Error::CorruptHeader {
            path: path.into(),
            reason: format!(
                "sidecar promises {expected} bytes, file has {}",
                bytes.len()
            ),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let m = ChannelMatrix::new(meta.n_channels, meta.n_samples, meta.sample_rate, data)?;
    Ok((m, meta))
}
