use std::path::Path;

use coherence_core::types::Provenance;
use coherence_core::Error;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliResult;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// serde_json maps are key-sorted, so this is canonical for a given value.
pub fn canonical_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v = serde_json::to_value(value).map_err(Error::from)?;
    Ok(serde_json::to_string(&v).map_err(Error::from)?)
}

pub fn file_hash(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

pub fn provenance<T: Serialize>(
    command: &str,
    seed: Option<u64>,
    config: &T,
) -> CliResult<Provenance> {
    Ok(Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        config_hash: sha256_hex(canonical_json(config)?.as_bytes()),
    })
}

/// `<out>.json` next to a data file.
pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".json");
    s.into()
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}
