//! File IO for stage artifacts and the per-stage manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// Relative to the config directory when possible.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageManifest {
    pub stage: String,
    pub params: Value,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

/// Records every file a stage reads and writes.
pub struct Tracker {
    base: PathBuf,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    std::fs::rename(tmp, path)
}

impl Tracker {
    pub fn new(base: &Path) -> Self {
        Tracker { base: base.to_path_buf(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn display(&self, path: &Path) -> String {
        let shown = path.strip_prefix(&self.base).unwrap_or(path);
        shown.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
    }

    fn artifact(&self, path: &Path, bytes: &[u8]) -> Artifact {
        Artifact { path: self.display(path), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 }
    }

    pub fn read_bytes(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.inputs.push(self.artifact(path, &bytes));
        Ok(bytes)
    }

    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = self.read_bytes(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{}: not UTF-8", path.display())))
    }

    /// Registers a file written by someone else (e.g. the batch runner).
    pub fn note_output(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.outputs.push(self.artifact(path, &bytes));
        Ok(())
    }

    pub fn write(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        write_atomic(path, text.as_bytes()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.outputs.push(self.artifact(path, text.as_bytes()));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
        self.write(path, &text)
    }

    /// Writes `<out>/manifests/<name>.json` and returns the manifest.
    pub fn finish(self, out: &Path, stage: &str, name: &str, params: Value) -> Result<StageManifest, CliError> {
        let manifest = StageManifest { stage: stage.to_string(), params, inputs: self.inputs, outputs: self.outputs };
        let path = out.join("manifests").join(format!("{name}.json"));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        write_atomic(&path, text.as_bytes()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

/// Files under `dir` with the given extension, recursively, sorted.
pub fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|e| CliError::Data(format!("{}: {e}", d.display())))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::Data(e.to_string()))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
