//! On-disk replay cache: one JSON file per (request, sample index) key.
//!
//! File layout is `<dir>/<key>.json` with fields in this order:
//! `key`, `seed_tag`, `sample_index`, `temperature`, `top_p`, `model`,
//! `backend_id`, `messages_sha256`, `completion`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatMessage, GenRequest};
use crate::error::{Error, Result};
use crate::model::write_atomic;

#[derive(Serialize)]
struct KeyMaterial<'a> {
    messages: &'a [ChatMessage],
    temperature: f64,
    top_p: f64,
    sample_index: usize,
    seed_tag: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
}

/// Hex SHA-256 of the rendered messages, sampling parameters, sample index
/// and seed tag.
pub fn cache_key(req: &GenRequest, sample_index: usize) -> String {
    let material = KeyMaterial {
        messages: &req.messages,
        temperature: req.temperature,
        top_p: req.top_p,
        sample_index,
        seed_tag: &req.seed_tag,
        model: req.model.as_deref(),
    };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub seed_tag: String,
    pub sample_index: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub model: Option<String>,
    pub backend_id: String,
    pub messages_sha256: String,
    pub completion: String,
}

impl CacheEntry {
    pub fn new(req: &GenRequest, sample_index: usize, backend_id: &str, completion: &str) -> Self {
        let messages = serde_json::to_vec(&req.messages).expect("messages serialize");
        Self {
            key: cache_key(req, sample_index),
            seed_tag: req.seed_tag.clone(),
            sample_index,
            temperature: req.temperature,
            top_p: req.top_p,
            model: req.model.clone(),
            backend_id: backend_id.to_string(),
            messages_sha256: hex::encode(Sha256::digest(&messages)),
            completion: completion.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayCache {
    dir: PathBuf,
}

impl ReplayCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let entry: CacheEntry = serde_json::from_slice(&bytes)?;
                Ok(Some(entry))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::file(path, e)),
        }
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(entry)?;
        bytes.push(b'\n');
        write_atomic(&self.path_for(&entry.key), &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_component() {
        let base = GenRequest::new(vec![ChatMessage::user("p")], 2, "s");
        let k = cache_key(&base, 0);
        assert_eq!(k, cache_key(&base.clone(), 0));
        assert_ne!(k, cache_key(&base, 1));
        let mut r = base.clone();
        r.temperature = 0.0;
        assert_ne!(k, cache_key(&r, 0));
        let mut r = base.clone();
        r.top_p = 1.0;
        assert_ne!(k, cache_key(&r, 0));
        let mut r = base.clone();
        r.seed_tag = "t".into();
        assert_ne!(k, cache_key(&r, 0));
        let mut r = base.clone();
        r.messages[0].content.push('!');
        assert_ne!(k, cache_key(&r, 0));
        // n_samples and max_tokens do not participate
        let mut r = base.clone();
        r.n_samples = 8;
        r.max_tokens = 1;
        assert_eq!(k, cache_key(&r, 0));
    }

    #[test]
    fn entry_field_order_is_stable() {
        let req = GenRequest::new(vec![ChatMessage::user("p")], 1, "s");
        let json = serde_json::to_string(&CacheEntry::new(&req, 0, "b", "c")).unwrap();
        let order = [
            "\"key\"",
            "\"seed_tag\"",
            "\"sample_index\"",
            "\"temperature\"",
            "\"top_p\"",
            "\"model\"",
            "\"backend_id\"",
            "\"messages_sha256\"",
            "\"completion\"",
        ];
        let positions: Vec<usize> = order.iter().map(|f| json.find(f).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
