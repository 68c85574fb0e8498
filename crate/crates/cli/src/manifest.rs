use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Classify, CmdResult};

/// Record of one command run, written next to its outputs as
/// `{command}.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the effective configuration JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub version: String,
    pub wall_time_secs: f64,
}

/// A file and the SHA-256 of its contents when the run finished, `None` if
/// it could not be read.
#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: Option<String>,
}

impl FileEntry {
    fn of(path: PathBuf) -> Self {
        let sha256 = fs::read(&path).ok().map(|b| sha256_hex(&b));
        Self { path, sha256 }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects what a command reads and writes while it runs.
pub struct Recorder {
    command: String,
    started: Instant,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            started: Instant::now(),
            seeds: vec![seed],
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn finish(self, config: &impl Serialize, out_dir: &Path) -> CmdResult<PathBuf> {
        let config = serde_json::to_value(config).runtime()?;
        let manifest = RunManifest {
            config_hash: sha256_hex(config.to_string().as_bytes()),
            config,
            command: self.command.clone(),
            seeds: self.seeds,
            inputs: self.inputs.into_iter().map(FileEntry::of).collect(),
            outputs: self.outputs.into_iter().map(FileEntry::of).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&manifest).runtime()?).runtime()?;
        Ok(path)
    }
}
