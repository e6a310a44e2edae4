use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::write_json;

/// Record written beside every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
    /// Command-specific details such as selected r_e or membership size.
    pub details: serde_json::Value,
}

pub struct ManifestBuilder {
    command: String,
    config: RunConfig,
    started: Instant,
    outputs: Vec<PathBuf>,
    details: serde_json::Map<String, serde_json::Value>,
}

impl ManifestBuilder {
    pub fn start(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            started: Instant::now(),
            outputs: Vec::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.into(), v);
    }

    pub fn finish(self) -> Manifest {
        Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.config.seed,
            config: self.config,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            details: serde_json::Value::Object(self.details),
        }
    }

    /// Writes `<command>.manifest.json` into the output directory and returns its path.
    pub fn write(self) -> Result<PathBuf> {
        let path = self
            .config
            .output_dir
            .join(format!("{}.manifest.json", self.command));
        write_json(&path, &self.finish())?;
        Ok(path)
    }
}
