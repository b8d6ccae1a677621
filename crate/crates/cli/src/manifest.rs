//! Run manifest: config echo plus a content hash for every output file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub timestamp_unix: u64,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(digest.len() * 2);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Hashes every data file and writes `manifest.json` beside them. The data
/// files are byte-reproducible for a fixed config and seed; the manifest
/// itself carries the timestamp and wall time and is not.
pub fn write_manifest(
    dir: &Path,
    config: &ExperimentConfig,
    files: &[PathBuf],
    wall_time_seconds: f64,
) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(files.len());
    for file in files {
        let bytes = std::fs::read(file)
            .with_context(|| format!("reading output file {}", file.display()))?;
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        entries.push(ManifestEntry {
            path: name,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        tool: "tetratomo".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: config.seed,
        wall_time_seconds,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files: entries,
    };
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, body)
        .with_context(|| format!("writing manifest {}", path.display()))?;
    Ok(path)
}
