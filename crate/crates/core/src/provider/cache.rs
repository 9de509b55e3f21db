//! Append-only JSONL caption cache keyed by image content hash.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::CaptionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub hash: String,
    pub image_id: String,
    pub caption: String,
    /// Retrieval time, unix milliseconds.
    pub ts: u64,
    pub latency_ms: u64,
}

/// One file per provider: `<dir>/<provider>.jsonl`. The first entry for a
/// hash wins; later duplicates in the file are ignored on load.
#[derive(Debug)]
pub struct CaptionCache {
    path: PathBuf,
    index: RwLock<HashMap<String, CacheEntry>>,
    writer: Mutex<File>,
}

pub fn cache_file_name(provider_id: &str) -> String {
    let safe: String = provider_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{safe}.jsonl")
}

impl CaptionCache {
    pub fn open(dir: &Path, provider_id: &str) -> Result<Self, CaptionError> {
        fs::create_dir_all(dir).map_err(|e| CaptionError::Cache(format!("{}: {e}", dir.display())))?;
        Self::open_file(&dir.join(cache_file_name(provider_id)))
    }

    pub fn open_file(path: &Path) -> Result<Self, CaptionError> {
        let cache_err = |e: std::io::Error| CaptionError::Cache(format!("{}: {e}", path.display()));
        let mut index = HashMap::new();
        if path.is_file() {
            let reader = BufReader::new(File::open(path).map_err(cache_err)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(cache_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry = serde_json::from_str(&line).map_err(|e| {
                    CaptionError::Cache(format!("{} line {}: {e}", path.display(), n + 1))
                })?;
                index.entry(entry.hash.clone()).or_insert(entry);
            }
        }
        let writer = OpenOptions::new().create(true).append(true).open(path).map_err(cache_err)?;
        Ok(Self {
            path: path.to_path_buf(),
            index: RwLock::new(index),
            writer: Mutex::new(writer),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, hash: &str) -> Option<CacheEntry> {
        self.index.read().expect("cache index poisoned").get(hash).cloned()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `entry` unless the hash is already cached; returns the entry
    /// that ends up in the cache.
    pub fn put(&self, entry: CacheEntry) -> Result<CacheEntry, CaptionError> {
        let mut writer = self.writer.lock().expect("cache writer poisoned");
        if let Some(existing) = self.get(&entry.hash) {
            return Ok(existing);
        }
        let mut line = serde_json::to_string(&entry).map_err(|e| CaptionError::Cache(e.to_string()))?;
        line.push('\n');
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| CaptionError::Cache(format!("{}: {e}", self.path.display())))?;
        self.index
            .write()
            .expect("cache index poisoned")
            .insert(entry.hash.clone(), entry.clone());
        Ok(entry)
    }
}
