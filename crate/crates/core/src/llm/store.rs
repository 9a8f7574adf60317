//! One JSON file per recorded completion, named by request digest.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub request: CompletionRequest,
    pub response_text: String,
    pub latency_ms: u64,
}

/// Reads are lock-free; writes to the same digest are serialized and land
/// atomically via rename.
#[derive(Clone)]
pub struct ReplayStore {
    dir: PathBuf,
    locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

impl fmt::Debug for ReplayStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReplayStore")
            .field("dir", &self.dir)
            .finish()
    }
}

fn store_err(path: &Path, e: impl fmt::Display) -> GatewayError {
    GatewayError::Store(format!("{}: {e}", path.display()))
}

fn valid_digest(d: &str) -> bool {
    !d.is_empty() && d.chars().all(|c| c.is_ascii_hexdigit())
}

impl ReplayStore {
    /// Opens (creating if needed) a store directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| store_err(&dir, e))?;
        Ok(Self {
            dir,
            locks: Arc::default(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, digest: &str) -> Result<PathBuf, GatewayError> {
        if !valid_digest(digest) {
            return Err(GatewayError::Store(format!("malformed digest {digest:?}")));
        }
        Ok(self.dir.join(digest))
    }

    pub fn get(&self, digest: &str) -> Result<Option<StoredRecord>, GatewayError> {
        let path = self.path_for(digest)?;
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| store_err(&path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(store_err(&path, e)),
        }
    }

    pub fn put(&self, digest: &str, record: &StoredRecord) -> Result<(), GatewayError> {
        let path = self.path_for(digest)?;
        let lock = {
            let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
            locks.entry(digest.to_string()).or_default().clone()
        };
        let _held = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut text = serde_json::to_string_pretty(record).map_err(|e| store_err(&path, e))?;
        text.push('\n');
        let mut tmp =
            tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| store_err(&self.dir, e))?;
        tmp.write_all(text.as_bytes())
            .map_err(|e| store_err(&path, e))?;
        tmp.persist(&path).map_err(|e| store_err(&path, e.error))?;
        Ok(())
    }

    /// Every digest currently stored, sorted.
    pub fn digests(&self) -> Result<Vec<String>, GatewayError> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir).map_err(|e| store_err(&self.dir, e))? {
            let entry = entry.map_err(|e| store_err(&self.dir, e))?;
            if let Some(name) = entry.file_name().to_str() {
                if valid_digest(name) {
                    out.push(name.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str) -> StoredRecord {
        StoredRecord {
            request: CompletionRequest::new("m", vec![]),
            response_text: text.into(),
            latency_ms: 3,
        }
    }

    #[test]
    fn put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path().join("nested")).unwrap();
        let d = "ab12";
        assert_eq!(store.get(d).unwrap(), None);
        store.put(d, &record("x")).unwrap();
        assert_eq!(store.get(d).unwrap(), Some(record("x")));
        assert_eq!(store.digests().unwrap(), vec![d.to_string()]);
    }

    #[test]
    fn rejects_path_like_digests() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path()).unwrap();
        assert!(store.get("../etc/passwd").is_err());
    }

    #[test]
    fn concurrent_writers_leave_a_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path()).unwrap();
        std::thread::scope(|s| {
            for i in 0..16 {
                let store = store.clone();
                s.spawn(move || store.put("ff", &record(&"y".repeat(1000 + i))).unwrap());
            }
        });
        let got = store.get("ff").unwrap().unwrap();
        assert!(got.response_text.len() >= 1000);
        assert_eq!(store.digests().unwrap(), vec!["ff".to_string()]);
    }
}
