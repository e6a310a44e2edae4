//! On-disk formats: CSV tables, the binary channel matrix, PGM frames and raw frame blobs.

mod frames;
mod matrix;
mod table;

pub use frames::{
    load_frames, read_pgm, save_blob, save_pgm_dir, write_pgm, SequenceMeta, SEQUENCE_META_FILE,
};
pub use matrix::{read_matrix, sidecar_path, write_matrix, MatrixMeta};
pub use table::{
    csv_string, fmt_f64, read_signal_csv, write_coefficients_csv, write_csv, write_pairs_csv,
    write_signal_csv,
};

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
