//! Responses stored one file per key, where the key hashes the prompt bytes,
//! the model id and the temperature.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{GatewayError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub temperature: f64,
    pub response: String,
    /// Seconds since the Unix epoch when the entry was written.
    pub timestamp: u64,
    pub attempts: u32,
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write: Mutex<()>,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<ResponseCache> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| GatewayError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(ResponseCache {
            dir,
            write: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(prompt: &str, model: &str, temperature: f64) -> String {
        let mut h = Sha256::new();
        for part in [prompt.as_bytes(), model.as_bytes(), temperature.to_string().as_bytes()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// The stored entry, if any. Unreadable files count as misses.
    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let bytes = fs::read(self.path(key)).ok()?;
        serde_json::from_slice::<CacheEntry>(&bytes)
            .ok()
            .filter(|e| e.key == key)
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial entry.
    pub fn put(&self, model: &str, temperature: f64, prompt: &str, response: &str, attempts: u32) -> Result<CacheEntry> {
        let key = Self::key(prompt, model, temperature);
        let entry = CacheEntry {
            key: key.clone(),
            model: model.to_string(),
            temperature,
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            attempts,
        };
        let bytes = serde_json::to_vec_pretty(&entry).map_err(|e| GatewayError::Cache(e.to_string()))?;
        let _guard = self.write.lock().map_err(|_| GatewayError::Cache("cache lock poisoned".into()))?;
        let tmp = self.dir.join(format!(".{key}.tmp"));
        let io = |e: std::io::Error| GatewayError::Cache(format!("{}: {e}", tmp.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, self.path(&key)).map_err(io)?;
        Ok(entry)
    }
}
