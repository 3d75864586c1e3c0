//! Chat-completion backends.
//!
//! The HTTP backend posts `{"model", "messages", "temperature"}` to
//! `{base_url}/chat/completions` and reads `choices[0].message.content`. The
//! API key comes from `LARE_LLM_API_KEY`; `LARE_LLM_BASE_URL` overrides the
//! configured base URL.
//!
//! The mock backend serves replies from a directory. In sequential mode the
//! files whose names start with digits (`001.txt`, `002.txt`, ...) are
//! returned in numeric order, one per request. In keyed mode the reply to a
//! request lives in `<hash>.txt`, where `<hash>` is [`request_hash`] of its
//! messages.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{LlmError, Result};
use crate::prompt::Message;

pub const API_KEY_VAR: &str = "LARE_LLM_API_KEY";
pub const BASE_URL_VAR: &str = "LARE_LLM_BASE_URL";

pub trait ChatBackend {
    fn complete(&mut self, messages: &[Message]) -> Result<String>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&mut self, messages: &[Message]) -> Result<String> {
        (**self).complete(messages)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    #[default]
    Sequential,
    Keyed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmBackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default)]
    pub mock_dir: Option<PathBuf>,
    #[serde(default)]
    pub mock_mode: MockMode,
}

fn default_model() -> String {
    "gpt-4o".into()
}
fn default_temperature() -> f64 {
    1.0
}
fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> usize {
    3
}

impl LlmBackendConfig {
    pub fn mock(dir: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Mock,
            base_url: None,
            model_name: default_model(),
            temperature: default_temperature(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            mock_dir: Some(dir.into()),
            mock_mode: MockMode::Sequential,
        }
    }

    pub fn http(base_url: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            base_url: Some(base_url.into()),
            mock_dir: None,
            ..Self::mock("")
        }
    }

    /// Configured base URL, overridden by the environment.
    pub fn resolved_base_url(&self) -> Option<String> {
        std::env::var(BASE_URL_VAR)
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| self.base_url.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(LlmError::Config(format!("temperature {} is negative", self.temperature)));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        match self.kind {
            BackendKind::Http if self.resolved_base_url().is_none() => Err(LlmError::Config(format!(
                "http backend needs base_url or {BASE_URL_VAR}"
            ))),
            BackendKind::Mock if self.mock_dir.is_none() => Err(LlmError::Config("mock backend needs mock_dir".into())),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn ChatBackend>> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Http => Box::new(HttpBackend::new(self)?),
            BackendKind::Mock => {
                let dir = self.mock_dir.as_ref().expect("validated");
                match self.mock_mode {
                    MockMode::Sequential => Box::new(MockBackend::sequential(dir)?),
                    MockMode::Keyed => Box::new(MockBackend::keyed(dir)?),
                }
            }
        })
    }
}

pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    model: String,
    temperature: f64,
    max_retries: usize,
}

impl HttpBackend {
    pub fn new(cfg: &LlmBackendConfig) -> Result<Self> {
        let base = cfg
            .resolved_base_url()
            .ok_or_else(|| LlmError::Config(format!("no base URL; set base_url or {BASE_URL_VAR}")))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            agent,
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            max_retries: cfg.max_retries,
        })
    }

    fn attempt(&self, body: &Value) -> std::result::Result<String, String> {
        let mut req = self.agent.post(&self.url);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let v: Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&mut self, messages: &[Message]) -> Result<String> {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        });
        let attempts = self.max_retries + 1;
        let mut last = String::new();
        for i in 0..attempts {
            match self.attempt(&body) {
                Ok(s) => return Ok(s),
                Err(e) => last = e,
            }
            if i + 1 < attempts {
                std::thread::sleep(Duration::from_millis(100 << i.min(6)));
            }
        }
        Err(LlmError::BackendUnavailable { attempts, message: last })
    }
}

/// Hex SHA-256 of the compact JSON encoding of `messages`.
pub fn request_hash(messages: &[Message]) -> String {
    let bytes = serde_json::to_vec(messages).expect("messages serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
enum Source {
    Queue(VecDeque<(PathBuf, String)>),
    Keyed(PathBuf),
}

/// Offline backend serving canned replies.
#[derive(Debug, Clone)]
pub struct MockBackend {
    source: Source,
    served: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LlmError::Fixture {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl MockBackend {
    pub fn sequential(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| LlmError::Fixture {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut files: Vec<(u64, PathBuf)> = Vec::new();
        for entry in entries {
            let path = entry
                .map_err(|e| LlmError::Fixture {
                    path: dir.to_path_buf(),
                    message: e.to_string(),
                })?
                .path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let digits: String = name.chars().take_while(char::is_ascii_digit).collect();
            if let Ok(n) = digits.parse() {
                files.push((n, path));
            }
        }
        files.sort();
        let queue = files
            .into_iter()
            .map(|(_, p)| read(&p).map(|s| (p, s)))
            .collect::<Result<_>>()?;
        Ok(Self {
            source: Source::Queue(queue),
            served: 0,
        })
    }

    pub fn keyed(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(LlmError::Fixture {
                path: dir.to_path_buf(),
                message: "not a directory".into(),
            });
        }
        Ok(Self {
            source: Source::Keyed(dir.to_path_buf()),
            served: 0,
        })
    }

    /// Serves `replies` in order.
    pub fn from_replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let queue = replies
            .into_iter()
            .enumerate()
            .map(|(i, r)| (PathBuf::from(format!("<reply {}>", i + 1)), r.into()))
            .collect();
        Self {
            source: Source::Queue(queue),
            served: 0,
        }
    }

    pub fn served(&self) -> usize {
        self.served
    }

    /// Replies not yet served in sequential mode.
    pub fn remaining(&self) -> Option<usize> {
        match &self.source {
            Source::Queue(q) => Some(q.len()),
            Source::Keyed(_) => None,
        }
    }
}

impl ChatBackend for MockBackend {
    fn complete(&mut self, messages: &[Message]) -> Result<String> {
        let reply = match &mut self.source {
            Source::Queue(q) => q
                .pop_front()
                .map(|(_, s)| s)
                .ok_or_else(|| LlmError::BackendUnavailable {
                    attempts: 1,
                    message: format!("mock fixtures exhausted after {} replies", self.served),
                })?,
            Source::Keyed(dir) => {
                let path = dir.join(format!("{}.txt", request_hash(messages)));
                if !path.exists() {
                    return Err(LlmError::BackendUnavailable {
                        attempts: 1,
                        message: format!("no fixture {}", path.display()),
                    });
                }
                read(&path)?
            }
        };
        self.served += 1;
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_orders_numerically() {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in [("10.txt", "ten"), ("2.txt", "two"), ("notes.md", "x"), ("001_a.txt", "one")] {
            fs::write(dir.path().join(name), body).unwrap();
        }
        let mut m = MockBackend::sequential(dir.path()).unwrap();
        let got: Vec<String> = (0..3).map(|_| m.complete(&[]).unwrap()).collect();
        assert_eq!(got, ["one", "two", "ten"]);
        assert!(matches!(m.complete(&[]), Err(LlmError::BackendUnavailable { .. })));
    }

    #[test]
    fn keyed_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let msgs = vec![Message::user("hi")];
        fs::write(dir.path().join(format!("{}.txt", request_hash(&msgs))), "hello").unwrap();
        let mut m = MockBackend::keyed(dir.path()).unwrap();
        assert_eq!(m.complete(&msgs).unwrap(), "hello");
        assert!(m.complete(&[Message::user("other")]).is_err());
    }

    #[test]
    fn hash_is_stable() {
        let h = request_hash(&[Message::user("a")]);
        assert_eq!(h.len(), 64);
        assert_eq!(h, request_hash(&[Message::user("a")]));
        assert_ne!(h, request_hash(&[Message::system("a")]));
    }

    #[test]
    fn config_validation() {
        let mut c = LlmBackendConfig::mock("x");
        assert!(c.validate().is_ok());
        c.temperature = -1.0;
        assert!(c.validate().is_err());
        let mut h = LlmBackendConfig::http("http://localhost");
        assert!(h.validate().is_ok());
        h.base_url = None;
        if std::env::var(BASE_URL_VAR).is_err() {
            assert!(h.validate().is_err());
        }
    }

    #[test]
    fn unreachable_http_gives_up() {
        let mut cfg = LlmBackendConfig::http("http://127.0.0.1:9");
        cfg.max_retries = 1;
        cfg.timeout_secs = 2.0;
        let mut b = HttpBackend::new(&cfg).unwrap();
        b.url = "http://127.0.0.1:9/chat/completions".into();
        match b.complete(&[Message::user("x")]) {
            Err(LlmError::BackendUnavailable { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("{other:?}"),
        }
    }
}
