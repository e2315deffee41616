//! Output files and the per-run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    /// sha256 of every data file written by the run.
    pub checksums: BTreeMap<String, String>,
    /// Command-specific notes (tuning grids, estimated constants).
    pub notes: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes data files into one directory and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            checksums: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.checksums.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes `summary.json` and then `manifest.json`, consuming the writer.
    pub fn finish(
        mut self,
        command: &str,
        config: &BTreeMap<String, String>,
        summary: &serde_json::Value,
        notes: BTreeMap<String, serde_json::Value>,
        wall_clock_seconds: f64,
    ) -> std::io::Result<RunManifest> {
        let summary = serde_json::to_vec_pretty(summary).map_err(std::io::Error::other)?;
        self.write("summary.json", &summary)?;
        let manifest = RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            config: config.clone(),
            wall_clock_seconds,
            checksums: self.checksums,
            notes,
        };
        let bytes = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
        fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(manifest)
    }
}
