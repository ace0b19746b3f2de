//! OpenAI-compatible chat-completions backend over HTTP.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, ChatMessage, GenRequest};
use crate::error::{Error, Result};

const MAX_ATTEMPTS: u32 = 3;

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    top_p: f64,
    n: usize,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

pub struct LiveBackend {
    base: String,
    api_key: Option<String>,
    model: String,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(base: impl Into<String>, api_key: Option<String>, model: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(600)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            api_key,
            model: model.into(),
            agent,
        }
    }

    /// Reads `UTD_API_BASE`, `UTD_API_KEY` and `UTD_MODEL`; `model` overrides
    /// the environment's model id.
    pub fn from_env(model: Option<String>) -> Result<Self> {
        let base = std::env::var("UTD_API_BASE")
            .map_err(|_| Error::Config("UTD_API_BASE is not set".into()))?;
        let model = match model {
            Some(m) => m,
            None => std::env::var("UTD_MODEL")
                .map_err(|_| Error::Config("UTD_MODEL is not set and --model not given".into()))?,
        };
        Ok(Self::new(base, std::env::var("UTD_API_KEY").ok(), model))
    }

    fn post(&self, req: &GenRequest, n: usize) -> Result<Vec<String>> {
        let body = ChatBody {
            model: req.model.as_deref().unwrap_or(&self.model),
            messages: &req.messages,
            temperature: req.temperature,
            top_p: req.top_p,
            n,
            max_tokens: req.max_tokens,
        };
        let url = format!("{}/chat/completions", self.base);
        let mut last = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(500 << attempt));
            }
            let mut call = self.agent.post(&url);
            if let Some(key) = &self.api_key {
                call = call.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = match call.send_json(&body) {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status == 429 || status >= 500 {
                last = format!("HTTP {status}");
                continue;
            }
            if status >= 400 {
                let text = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(Error::Gateway(format!("HTTP {status}: {text}")));
            }
            let reply: ChatReply = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Gateway(format!("malformed reply: {e}")))?;
            return Ok(reply
                .choices
                .into_iter()
                .map(|c| c.message.content.unwrap_or_default())
                .collect());
        }
        Err(Error::Gateway(format!(
            "{url}: giving up after {MAX_ATTEMPTS} attempts: {last}"
        )))
    }
}

impl Backend for LiveBackend {
    fn id(&self) -> String {
        format!("live:{}", self.model)
    }

    fn complete(&self, req: &GenRequest) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(req.n_samples);
        // servers that ignore `n` return a single choice; top up one by one
        while out.len() < req.n_samples {
            let want = req.n_samples - out.len();
            let got = self.post(req, want)?;
            if got.is_empty() {
                return Err(Error::Gateway("reply held no choices".into()));
            }
            out.extend(got.into_iter().take(want));
        }
        Ok(out)
    }
}
