//! Deterministic playback backend for offline runs.
//!
//! A script is an ordered list of entries. Each request is served by the
//! first entry whose matcher accepts it and which still holds enough
//! completions; non-repeating entries are consumed front to back, repeating
//! entries cycle forever.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Backend, GenRequest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matcher {
    /// Substring that must occur in the joined prompt text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    /// Prefix that the request's seed tag must start with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Substring that must NOT occur in the prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excludes: Option<String>,
}

impl Matcher {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn contains(s: impl Into<String>) -> Self {
        Self {
            contains: Some(s.into()),
            ..Self::default()
        }
    }

    pub fn tag(s: impl Into<String>) -> Self {
        Self {
            tag: Some(s.into()),
            ..Self::default()
        }
    }

    pub fn matches(&self, req: &GenRequest, prompt: &str) -> bool {
        self.contains.as_deref().is_none_or(|s| prompt.contains(s))
            && self.tag.as_deref().is_none_or(|t| req.seed_tag.starts_with(t))
            && self.excludes.as_deref().is_none_or(|s| !prompt.contains(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(flatten)]
    pub matcher: Matcher,
    pub completions: Vec<String>,
    #[serde(default)]
    pub repeat: bool,
}

impl ScriptEntry {
    pub fn new(matcher: Matcher, completions: Vec<String>) -> Self {
        Self {
            matcher,
            completions,
            repeat: false,
        }
    }

    pub fn repeating(matcher: Matcher, completions: Vec<String>) -> Self {
        Self {
            matcher,
            completions,
            repeat: true,
        }
    }
}

/// Fixture file shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "default_script_id")]
    pub backend_id: String,
    pub entries: Vec<ScriptEntry>,
}

fn default_script_id() -> String {
    "scripted".into()
}

impl Script {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("script {}: {e}", path.display())))
    }
}

pub struct ScriptedBackend {
    id: String,
    entries: Vec<ScriptEntry>,
    cursors: Mutex<Vec<usize>>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self::from_script(Script {
            backend_id: default_script_id(),
            entries,
        })
    }

    pub fn from_script(script: Script) -> Self {
        Self {
            id: script.backend_id,
            cursors: Mutex::new(vec![0; script.entries.len()]),
            entries: script.entries,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_script(Script::load(path)?))
    }

    /// Completions not yet consumed from non-repeating entries.
    pub fn remaining(&self) -> usize {
        let cursors = self.cursors.lock().unwrap_or_else(|e| e.into_inner());
        self.entries
            .iter()
            .zip(cursors.iter())
            .filter(|(e, _)| !e.repeat)
            .map(|(e, c)| e.completions.len().saturating_sub(*c))
            .sum()
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn complete(&self, req: &GenRequest) -> Result<Vec<String>> {
        let prompt = req.prompt_text();
        let n = req.n_samples;
        let mut cursors = self.cursors.lock().unwrap_or_else(|e| e.into_inner());
        for (entry, cursor) in self.entries.iter().zip(cursors.iter_mut()) {
            if entry.completions.is_empty() || !entry.matcher.matches(req, &prompt) {
                continue;
            }
            if entry.repeat {
                let len = entry.completions.len();
                let out = (0..n)
                    .map(|i| entry.completions[(*cursor + i) % len].clone())
                    .collect();
                *cursor = (*cursor + n) % len;
                return Ok(out);
            }
            if entry.completions.len() - *cursor >= n {
                let out = entry.completions[*cursor..*cursor + n].to_vec();
                *cursor += n;
                return Ok(out);
            }
        }
        let excerpt: String = prompt.chars().take(120).collect();
        Err(Error::ScriptExhausted(format!(
            "seed_tag `{}`, n={n}, prompt `{excerpt}`",
            req.seed_tag
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ChatMessage, Gateway};

    fn req(prompt: &str, n: usize, tag: &str) -> GenRequest {
        GenRequest::new(vec![ChatMessage::user(prompt)], n, tag)
    }

    #[test]
    fn plays_back_in_order() {
        let outs: Vec<String> = (0..8).map(|i| format!("out{i}")).collect();
        let gw = Gateway::new(ScriptedBackend::new(vec![ScriptEntry::new(
            Matcher::any(),
            outs.clone(),
        )]));
        let resp = gw.generate(&req("anything", 8, "t")).unwrap();
        assert_eq!(resp.completions, outs);
        assert!(matches!(
            gw.generate(&req("anything", 1, "t")),
            Err(Error::ScriptExhausted(_))
        ));
    }

    #[test]
    fn matchers_route_requests() {
        let backend = ScriptedBackend::new(vec![
            ScriptEntry::new(Matcher::tag("debug/"), vec!["edit".into()]),
            ScriptEntry::new(Matcher::contains("vote"), vec!["a".into(), "b".into()]),
            ScriptEntry::repeating(Matcher::any(), vec!["x".into()]),
        ]);
        assert_eq!(backend.complete(&req("vote here", 2, "sc/1")).unwrap(), vec!["a", "b"]);
        assert_eq!(backend.complete(&req("p", 1, "debug/p/1")).unwrap(), vec!["edit"]);
        // consumed entries fall through to the repeating catch-all
        assert_eq!(backend.complete(&req("p", 3, "debug/p/2")).unwrap(), vec!["x", "x", "x"]);
        assert_eq!(backend.remaining(), 0);
    }

    #[test]
    fn parses_fixture_json() {
        let json = r#"{"backend_id":"fx","entries":[{"contains":"Arguments","completions":["a"]},{"tag":"t","repeat":true,"completions":["b"]}]}"#;
        let script: Script = serde_json::from_str(json).unwrap();
        assert_eq!(script.entries.len(), 2);
        assert!(script.entries[1].repeat);
        assert_eq!(script.entries[0].matcher.contains.as_deref(), Some("Arguments"));
    }
}
