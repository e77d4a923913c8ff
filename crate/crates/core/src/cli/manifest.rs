//! Run manifests: what was run, on which data, with which seeds, and how
//! long each phase took.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CamelError, Result};
use crate::learners::FitConfig;

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| CamelError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| CamelError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Hex SHA-256 of in-memory bytes.
pub fn bytes_sha256(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub command_line: Vec<String>,
    pub command: String,
    pub threads: usize,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<PathBuf>,
    /// Seconds per phase, in execution order.
    pub timings: Vec<(String, f64)>,
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: std::env::args().collect(),
            command: command.to_string(),
            threads: rayon::current_num_threads(),
            config: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn set_fit_config(&mut self, cfg: &FitConfig) {
        self.config.extend(super::options::describe(cfg));
        self.seeds.insert("base".to_string(), cfg.optim.seed);
        for (name, seed) in cfg.seed_streams() {
            self.seeds.insert(name.to_string(), seed);
        }
    }

    /// Records an input file with its content hash.
    pub fn add_input(
        &mut self,
        role: &str,
        path: &Path,
        shape: Option<(usize, usize)>,
    ) -> Result<()> {
        self.inputs.push(InputRecord {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
            rows: shape.map(|s| s.0),
            cols: shape.map(|s| s.1),
        });
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.notes.insert(
            key.to_string(),
            serde_json::to_value(value).expect("note serializes"),
        );
    }

    /// Runs `f`, recording its wall-clock time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .push((phase.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| CamelError::Format(e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| CamelError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(
            bytes_sha256(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc");
        std::fs::write(&path, b"abc").unwrap();
        assert_eq!(file_sha256(&path).unwrap(), bytes_sha256(b"abc"));
    }

    #[test]
    fn manifest_lists_every_seed_stream() {
        let mut m = RunManifest::new("fit");
        let cfg = FitConfig::default();
        m.set_fit_config(&cfg);
        assert_eq!(m.seeds.len(), cfg.seed_streams().len() + 1);
        let v: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(v["config"]["neighbors"], "10");
    }
}
