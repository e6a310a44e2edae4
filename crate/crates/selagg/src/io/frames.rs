use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use selagg_core::video::FrameSequence;
use serde::{Deserialize, Serialize};

use super::{write_file, write_json};
use crate::error::{Error, Result};

/// Metadata written next to a frame directory or blob.
pub const SEQUENCE_META_FILE: &str = "sequence.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub n_frames: usize,
}

const DEFAULT_FPS: f64 = 30.0;

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptHeader {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Binary greyscale PGM (`P5`, maxval 255). Returns `(width, height, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|reason| corrupt(path, reason))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ascii header".to_string())?,
        );
    }
    if fields[0] != "P5" {
        return Err(format!("magic {:?} is not P5", fields[0]));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("bad header number {s:?}"))
    };
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(format!("maxval {maxval} is not 255"));
    }
    if w == 0 || h == 0 {
        return Err("zero dimension".into());
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing separator after maxval".into());
    }
    let data = &bytes[pos + 1..];
    if data.len() != w * h {
        return Err(format!(
            "expected {} pixel bytes, found {}",
            w * h,
            data.len()
        ));
    }
    Ok((w, h, data.to_vec()))
}

pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    write_file(path, &bytes)
}

fn frame_name(k: usize) -> String {
    format!("frame_{k:06}.pgm")
}

fn meta_of(seq: &FrameSequence) -> SequenceMeta {
    SequenceMeta {
        width: seq.width(),
        height: seq.height(),
        fps: seq.fps(),
        n_frames: seq.len(),
    }
}

/// `frame_%06d.pgm` files plus `sequence.json` in `dir`.
pub fn save_pgm_dir(dir: &Path, seq: &FrameSequence) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    seq.frames()
        .par_iter()
        .enumerate()
        .try_for_each(|(k, f)| write_pgm(&dir.join(frame_name(k)), seq.width(), seq.height(), f))?;
    write_json(&dir.join(SEQUENCE_META_FILE), &meta_of(seq))
}

/// Raw 8-bit frames back to back, with a JSON sidecar at `path.with_extension("json")`.
pub fn save_blob(path: &Path, seq: &FrameSequence) -> Result<()> {
    let mut bytes = Vec::with_capacity(seq.len() * seq.width() * seq.height());
    for f in seq.frames() {
        bytes.extend_from_slice(f);
    }
    write_file(path, &bytes)?;
    write_json(&path.with_extension("json"), &meta_of(seq))
}

/// A directory of `frame_%06d.pgm` files, or a raw blob with its sidecar.
///
/// For directories the frame rate comes from `fps`, else `sequence.json`, else 30.
pub fn load_frames(path: &Path, fps: Option<f64>) -> Result<FrameSequence> {
    let kind = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if kind.is_dir() {
        load_dir(path, fps)
    } else {
        load_blob(path, fps)
    }
}

fn read_meta(path: &Path) -> Result<SequenceMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

fn load_dir(dir: &Path, fps: Option<f64>) -> Result<FrameSequence> {
    let mut files: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(index) = name
            .strip_prefix("frame_")
            .and_then(|s| s.strip_suffix(".pgm"))
        else {
            continue;
        };
        if let Ok(k) = index.parse::<usize>() {
            files.push((k, entry.path()));
        }
    }
    if files.is_empty() {
        return Err(corrupt(dir, "no frame_%06d.pgm files"));
    }
    files.sort();
    let decoded: Vec<(usize, usize, Vec<u8>)> = files
        .par_iter()
        .map(|(_, p)| read_pgm(p))
        .collect::<Result<_>>()?;
    let (w, h) = (decoded[0].0, decoded[0].1);
    for ((fw, fh, _), (_, p)) in decoded.iter().zip(&files) {
        if (*fw, *fh) != (w, h) {
            return Err(Error::DimensionMismatch {
                path: p.clone(),
                expected: (w, h),
                actual: (*fw, *fh),
            });
        }
    }
    let meta_path = dir.join(SEQUENCE_META_FILE);
    let fps = match fps {
        Some(f) => f,
        None if meta_path.exists() => read_meta(&meta_path)?.fps,
        None => DEFAULT_FPS,
    };
    Ok(FrameSequence::new(
        w,
        h,
        fps,
        decoded.into_iter().map(|(_, _, d)| d).collect(),
    )?)
}

fn load_blob(path: &Path, fps: Option<f64>) -> Result<FrameSequence> {
    let meta = read_meta(&path.with_extension("json"))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let frame = meta.width * meta.height;
    if frame == 0 || bytes.len() != frame * meta.n_frames {
        return Err(corrupt(
            path,
            format!(
                "sidecar promises {}x{}x{} bytes, blob has {}",
                meta.width,
                meta.height,
                meta.n_frames,
                bytes.len()
            ),
        ));
    }
    let frames = bytes.chunks_exact(frame).map(<[u8]>::to_vec).collect();
    Ok(FrameSequence::new(
        meta.width,
        meta.height,
        fps.unwrap_or(meta.fps),
        frames,
    )?)
}
