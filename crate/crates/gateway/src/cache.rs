use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sldx_core::digest::ContentHash;

use crate::{request_hash, GatewayError};

/// One cached completion, stored as `<request_hash>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub model_id: String,
    pub prompt_hash: ContentHash,
    pub text: String,
    pub created_at: String,
    /// Hex SHA-256 of `text`, checked on every read.
    pub text_sha256: String,
}

fn text_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| GatewayError::CacheIo { path: dir.clone(), source })?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, key: &ContentHash) -> PathBuf {
        self.dir.join(format!("{}.json", key.to_hex()))
    }

    pub fn get(&self, key: &ContentHash) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.entry_path(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(GatewayError::CacheIo { path, source }),
        };
        let corrupt = |message: String| GatewayError::CacheCorrupt { path: path.clone(), message };
        let entry: CacheEntry = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if text_digest(&entry.text) != entry.text_sha256 {
            return Err(corrupt("text digest mismatch".into()));
        }
        if request_hash(&entry.model_id, &entry.prompt_hash) != *key {
            return Err(corrupt("entry does not belong to this key".into()));
        }
        Ok(Some(entry))
    }

    /// Writes through a temporary file and a rename, so readers never see a partial entry.
    pub fn put(
        &self,
        model_id: &str,
        prompt_hash: ContentHash,
        text: &str,
        created_at: String,
    ) -> Result<ContentHash, GatewayError> {
        let key = request_hash(model_id, &prompt_hash);
        let entry = CacheEntry {
            model_id: model_id.to_string(),
            prompt_hash,
            text: text.to_string(),
            created_at,
            text_sha256: text_digest(text),
        };
        let final_path = self.entry_path(&key);
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            key.short(),
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| GatewayError::CacheIo { path, source }
        };
        let mut file = std::fs::File::create(&tmp).map_err(io(&tmp))?;
        let json = serde_json::to_vec_pretty(&entry).expect("cache entry serializes");
        file.write_all(&json).map_err(io(&tmp))?;
        file.sync_all().map_err(io(&tmp))?;
        drop(file);
        std::fs::rename(&tmp, &final_path).map_err(io(&final_path))?;
        Ok(key)
    }

    pub fn len(&self) -> Result<usize, GatewayError> {
        let entries =
            std::fs::read_dir(&self.dir).map_err(|source| GatewayError::CacheIo { path: self.dir.clone(), source })?;
        Ok(entries.filter_map(Result::ok).filter(|e| e.file_name().to_string_lossy().ends_with(".json")).count())
    }

    pub fn is_empty(&self) -> Result<bool, GatewayError> {
        Ok(self.len()? == 0)
    }
}
