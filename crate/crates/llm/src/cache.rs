//! Content-addressed store of raw backend responses.
//!
//! Layout: `<root>/<first two hex chars>/<sha256>.txt`. Writes go to a
//! temporary file in the same directory and are renamed into place, so a
//! reader never sees a partial entry.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::config::BackendConfig;

#[derive(Debug)]
pub struct ResponseCache {
    root: PathBuf,
    tmp_counter: AtomicU64,
}

/// Key over everything that determines the backend's response distribution,
/// plus the attempt number so that a re-ask is a distinct entry.
pub fn cache_key(cfg: &BackendConfig, prompt: &str, attempt: u32) -> String {
    let mut h = Sha256::new();
    for part in [
        cfg.model_name.as_str(),
        &format!("{:?}", cfg.temperature),
        &format!("{:?}", cfg.top_p),
        &format!("{:?}", cfg.max_tokens),
        cfg.system_prompt.as_deref().unwrap_or(""),
        &attempt.to_string(),
        prompt,
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

impl ResponseCache {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(ResponseCache { root, tmp_counter: AtomicU64::new(0) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.txt"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, text: &str) -> std::io::Result<()> {
        let path = self.path(key);
        let dir = path.parent().expect("cache entries live in a shard dir");
        std::fs::create_dir_all(dir)?;
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = dir.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, &path)
    }
}
