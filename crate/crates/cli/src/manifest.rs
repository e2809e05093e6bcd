//! Provenance record written next to every output.
//!
//! The manifest holds no timestamps, absolute paths or thread counts, so two
//! runs with the same inputs and semantic configuration write identical
//! manifests.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::io::{sha256_bytes, sha256_file, write_pretty_json};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            name: path
                .file_name()
                .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
            bytes: std::fs::metadata(path)?.len(),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub stage: String,
    pub config: Value,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub counters: Value,
}

/// Hash of the canonical JSON form of a stage configuration. Object keys are
/// sorted, so field order never matters.
pub fn config_hash(stage: &str, config: &Value) -> String {
    let canonical = serde_json::to_vec(&serde_json::json!({ "stage": stage, "config": config }))
        .expect("a JSON value always serializes");
    sha256_bytes(&canonical)
}

impl Manifest {
    pub fn new(stage: &str, config: &impl Serialize) -> Self {
        let config = serde_json::to_value(config).expect("stage configurations serialize");
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            stage: stage.to_owned(),
            config_hash: config_hash(stage, &config),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counters: Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn counters(&mut self, counters: &impl Serialize) {
        self.counters = serde_json::to_value(counters).expect("counters serialize");
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        log::info!("writing manifest {}", path.display());
        write_pretty_json(path, self)
    }
}

/// `out.jsonl` gets `out.jsonl.manifest.json`.
pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
