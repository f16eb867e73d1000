//! Collects a command's outputs in memory and writes them, with a manifest,
//! in one serialized pass.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use keyseg_core::{emit_table, Format, ReportTable};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub struct Outputs {
    pub command: String,
    pub files: BTreeMap<String, Vec<u8>>,
    pub inputs: Vec<(String, String)>,
    pub warnings: Vec<String>,
    format: Format,
    precision: usize,
}

impl Outputs {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Outputs {
            command: command.into(),
            files: BTreeMap::new(),
            inputs: Vec::new(),
            warnings: Vec::new(),
            format: cfg.format,
            precision: cfg.precision,
        }
    }

    pub fn input(&mut self, path: &Path, digest: &str) {
        self.inputs.push((path.display().to_string(), digest.to_string()));
    }

    pub fn table(&mut self, t: &ReportTable) {
        self.table_as(&t.name.clone(), t);
    }

    pub fn table_as(&mut self, stem: &str, t: &ReportTable) {
        let digests = self.inputs.iter().map(|i| i.1.clone());
        let t = t.clone().with_inputs(digests);
        let name = format!("{stem}.{}", self.format.extension());
        self.files.insert(name, emit_table(&t, self.format, self.precision));
    }

    pub fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.files.insert(name.into(), bytes);
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.into(), bytes);
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        eprintln!("warning: {w}");
        self.warnings.push(w);
    }

    /// Writes all files plus `manifest.json` under `dir`; returns the
    /// written paths.
    pub fn write(mut self, dir: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
        self.inputs.sort();
        self.inputs.dedup();
        let outputs: Vec<_> = self
            .files
            .iter()
            .map(|(name, bytes)| json!({ "file": name, "sha256": hex::encode(Sha256::digest(bytes)) }))
            .collect();
        let manifest = json!({
            "tool": "keyseg",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": cfg.digest(),
            "inputs": self.inputs.iter().map(|(p, d)| json!({ "path": p, "sha256": d })).collect::<Vec<_>>(),
            "outputs": outputs,
            "warnings": self.warnings,
        });
        self.json("manifest.json", &manifest);
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}
