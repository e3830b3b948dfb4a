//! Atomic writes, JSONL input and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temp file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("serializable row"));
        out.push('\n');
    }
    out
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::missing(path, e))
}

/// Fails with a usage error naming the first missing path.
pub fn require_files(paths: &[&Path]) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            let message = if p.exists() {
                "not a regular file"
            } else {
                "no such file"
            };
            return Err(CliError::Missing {
                path: p.to_path_buf(),
                message: message.into(),
            });
        }
    }
    Ok(())
}

/// Non-blank lines parsed as JSON values, with 1-based line numbers.
pub fn jsonl_values(path: &Path, bytes: &[u8]) -> Result<Vec<(usize, Value)>, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::data(path, format!("not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line).map_err(|e| CliError::data(path, format!("line {}: {e}", i + 1)))?;
        out.push((i + 1, v));
    }
    Ok(out)
}

pub fn jsonl_records<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<Vec<T>, CliError> {
    jsonl_values(path, bytes)?
        .into_iter()
        .map(|(line, v)| serde_json::from_value(v).map_err(|e| CliError::data(path, format!("line {line}: {e}"))))
        .collect()
}

/// Provenance record written next to every output.
pub struct Manifest {
    command: &'static str,
    config: Value,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &'static str, config: Value) -> Manifest {
        Manifest {
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push((path.to_path_buf(), sha256_hex(bytes)));
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(self.config.to_string().as_bytes())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": "coa",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash(),
            "inputs": self.inputs.iter().map(|(p, d)| json!({"path": p, "sha256": d})).collect::<Vec<_>>(),
            "outputs": self.outputs,
            "elapsed_seconds": self.started.elapsed().as_secs_f64(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// `<file>.manifest.json` beside a single output file.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_config_same_hash() {
        let a = Manifest::new("x", json!({"b": 1, "a": [1, 2]}));
        let b = Manifest::new("x", json!({"a": [1, 2], "b": 1}));
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), Manifest::new("x", json!({"b": 2})).config_hash());
    }

    #[test]
    fn manifest_name() {
        assert_eq!(
            manifest_path_for(Path::new("out/r.jsonl")),
            Path::new("out/r.jsonl.manifest.json")
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
