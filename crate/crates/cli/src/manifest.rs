//! Run manifest written next to each artifact.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub subcommand: String,
    pub config: RunConfig,
    pub config_sha256: String,
    pub tolerances: Value,
    pub wall_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub status: &'static str,
    pub failure: Option<String>,
}

/// SHA-256 of the effective configuration in canonical TOML form.
pub fn config_digest(cfg: &RunConfig) -> CliResult<String> {
    let text = toml::to_string(cfg).map_err(|e| CliError::Validation(format!("config does not serialize: {e}")))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

/// `out.json` → `out.json.manifest.json`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write(manifest: &Manifest, artifact: &Path) -> CliResult<PathBuf> {
    let path = manifest_path(artifact);
    let text = pdm_core::output::to_stable_json(manifest)?;
    std::fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(path)
}
