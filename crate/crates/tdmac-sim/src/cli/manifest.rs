//! Run manifest written next to every CSV output.
//!
//! The manifest pins everything needed to reproduce the CSVs exactly: the
//! resolved parameter set, the seed, the full command line, the tool
//! version, and the worker count (results are worker-count-invariant).

use serde::Serialize;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::CircuitParams;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_path: Option<String>,
    pub command: Vec<String>,
    pub seed: u64,
    pub output_dir: String,
    pub tool_version: String,
    pub unix_timestamp: u64,
    pub workers: usize,
    pub params: CircuitParams,
}

impl RunManifest {
    pub fn new(
        config_path: Option<&Path>,
        command: &[String],
        output_dir: &Path,
        workers: usize,
        params: &CircuitParams,
    ) -> Self {
        RunManifest {
            config_path: config_path.map(|p| p.display().to_string()),
            command: command.to_vec(),
            seed: params.seed,
            output_dir: output_dir.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            unix_timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            workers,
            params: params.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest always serializes");
        std::fs::write(dir.join("manifest.json"), json + "\n")
    }
}
