//! Manifests and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "coexbal";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Echo of a run's resolved parameters. Carries no timestamp so reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub params: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64, params: &impl Serialize) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            seed,
            params: serde_json::to_value(params).expect("parameters serialize"),
        }
    }
}

/// `<path><suffix>`, e.g. `run.part` + `.manifest.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_manifest(out: &Path, manifest: &Manifest) -> CliResult<()> {
    write_json(&sibling(out, ".manifest.json"), manifest)
}
