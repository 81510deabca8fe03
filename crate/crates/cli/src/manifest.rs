use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Written next to every output as `<output>.manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, without `--jobs`.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub dataset_fingerprint: String,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        args: &[String],
        config: serde_json::Value,
        seed: Option<u64>,
        fingerprint: String,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: args.to_vec(),
            config,
            seed,
            dataset_fingerprint: fingerprint,
            notes: Vec::new(),
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn write_for(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// SHA-256 over the given files' bytes, in order.
pub fn fingerprint(paths: &[PathBuf]) -> Result<String> {
    let mut hasher = Sha256::new();
    for p in paths {
        let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Drops `--jobs N`, `--jobs=N` and `-j N` from an argument list.
pub fn strip_jobs(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--jobs" || a == "-j" {
            skip = true;
            continue;
        }
        if a.starts_with("--jobs=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}
