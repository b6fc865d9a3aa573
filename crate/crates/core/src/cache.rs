//! Content-addressed response cache shared by the remote provider clients.
//!
//! Entries live in memory and, optionally, as one JSON file per key under a
//! cache directory. Each file carries a SHA-256 checksum of its payload.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache checksum mismatch in {}", path.display())]
    ChecksumMismatch { path: PathBuf },
    #[error("unreadable cache entry {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error("cache io error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize, Deserialize)]
struct Entry {
    checksum: String,
    payload: serde_json::Value,
}

#[derive(Debug)]
pub struct ContentCache<T> {
    namespace: String,
    memory: RwLock<HashMap<String, T>>,
    dir: Option<PathBuf>,
}

impl<T> ContentCache<T>
where
    T: Clone + Serialize + DeserializeOwned,
{
    pub fn in_memory(namespace: impl Into<String>) -> Self {
        ContentCache {
            namespace: namespace.into(),
            memory: RwLock::new(HashMap::new()),
            dir: None,
        }
    }

    pub fn persistent(namespace: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        ContentCache {
            dir: Some(dir.into()),
            ..ContentCache::in_memory(namespace)
        }
    }

    /// Key derived from the namespace and the request parts.
    pub fn key(&self, parts: &[&str]) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.namespace.as_bytes());
        for part in parts {
            hasher.update([0x1f]);
            hasher.update(part.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    fn path_for(dir: &Path, key: &str) -> PathBuf {
        dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<T>, CacheError> {
        if let Some(value) = self.memory.read().expect("cache lock").get(key) {
            return Ok(Some(value.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = Self::path_for(dir, key);
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| CacheError::Corrupt {
            path: path.clone(),
            reason,
        };
        let entry: Entry = serde_json::from_slice(&raw)
            .map_err(|_| CacheError::ChecksumMismatch { path: path.clone() })?;
        let payload = serde_json::to_vec(&entry.payload).map_err(|e| corrupt(e.to_string()))?;
        if sha256_hex(&payload) != entry.checksum {
            return Err(CacheError::ChecksumMismatch { path });
        }
        let value: T = serde_json::from_value(entry.payload).map_err(|e| corrupt(e.to_string()))?;
        self.memory
            .write()
            .expect("cache lock")
            .insert(key.to_string(), value.clone());
        Ok(Some(value))
    }

    /// Concurrent inserts of the same key are allowed; the last write wins.
    pub fn insert(&self, key: &str, value: &T) -> Result<(), CacheError> {
        if let Some(dir) = &self.dir {
            let payload = serde_json::to_value(value).map_err(|e| CacheError::Corrupt {
                path: dir.clone(),
                reason: e.to_string(),
            })?;
            let bytes = serde_json::to_vec(&payload).expect("json value serializes");
            let entry = Entry {
                checksum: sha256_hex(&bytes),
                payload,
            };
            let path = Self::path_for(dir, key);
            fs::create_dir_all(path.parent().expect("entry has a parent"))?;
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            fs::write(&tmp, serde_json::to_vec(&entry).expect("entry serializes"))?;
            fs::rename(&tmp, &path)?;
        }
        self.memory
            .write()
            .expect("cache lock")
            .insert(key.to_string(), value.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.memory.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let cache: ContentCache<Vec<f64>> = ContentCache::persistent("p", dir.path());
        let key = cache.key(&["hello"]);
        assert_eq!(cache.get(&key).unwrap(), None);
        cache.insert(&key, &vec![0.25, 0.5]).unwrap();

        let fresh: ContentCache<Vec<f64>> = ContentCache::persistent("p", dir.path());
        assert_eq!(fresh.get(&key).unwrap(), Some(vec![0.25, 0.5]));
    }

    #[test]
    fn namespaces_separate_keys() {
        let a: ContentCache<u8> = ContentCache::in_memory("a");
        let b: ContentCache<u8> = ContentCache::in_memory("b");
        assert_ne!(a.key(&["x"]), b.key(&["x"]));
        assert_ne!(a.key(&["x", "y"]), a.key(&["xy"]));
    }

    #[test]
    fn tampered_entry_detected() {
        let dir = tempfile::tempdir().unwrap();
        let cache: ContentCache<Vec<f64>> = ContentCache::persistent("p", dir.path());
        let key = cache.key(&["t"]);
        cache.insert(&key, &vec![1.0]).unwrap();
        let path = ContentCache::<Vec<f64>>::path_for(dir.path(), &key);
        let text = fs::read_to_string(&path).unwrap().replace("1.0", "2.0");
        fs::write(&path, text).unwrap();

        let fresh: ContentCache<Vec<f64>> = ContentCache::persistent("p", dir.path());
        let err = fresh.get(&key).unwrap_err();
        assert!(err.to_string().starts_with("cache checksum mismatch"));

        fs::write(&path, "garbage").unwrap();
        assert!(matches!(
            fresh.get(&key),
            Err(CacheError::ChecksumMismatch { .. })
        ));
    }
}
