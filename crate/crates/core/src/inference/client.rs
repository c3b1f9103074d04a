//! LLM clients: live HTTP, cassette replay and cassette recording.
//!
//! A cassette is a JSON Lines file of `{"fingerprint", "response"}` records.
//! The fingerprint is the SHA-256 of the request's model, prompt, temperature
//! and token limit, so any drift in prompt construction causes a replay miss.
//! When a fingerprint occurs on several lines, the n-th attempt for that
//! request replays the n-th recorded response (the last one once exhausted).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub sentence_id: String,
    pub prompt_text: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub model_name: String,
}

impl PromptRequest {
    /// Hex SHA-256 over the fields that determine the model's output.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            model: &'a str,
            prompt: &'a str,
            temperature: f64,
            max_tokens: u32,
        }
        let key = serde_json::to_vec(&Key {
            model: &self.model_name,
            prompt: &self.prompt_text,
            temperature: self.temperature,
            max_tokens: self.max_new_tokens,
        })
        .expect("fingerprint key serializes");
        hex::encode(Sha256::digest(key))
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("LLM unavailable: {0}")]
    Unavailable(String),
    #[error("no cassette entry for fingerprint {fingerprint} (sentence {sentence_id})")]
    CassetteMiss {
        fingerprint: String,
        sentence_id: String,
    },
    #[error("cassette {path}: {reason}")]
    Cassette { path: PathBuf, reason: String },
}

pub trait LlmClient: Send + Sync {
    /// Raw completion text. `attempt` is 1-based and only matters to replay.
    fn complete(&self, request: &PromptRequest, attempt: u32) -> Result<String, LlmError>;
}

/// Send a request through `client`.
pub fn infer(
    request: &PromptRequest,
    client: &dyn LlmClient,
    attempt: u32,
) -> Result<String, LlmError> {
    client.complete(request, attempt)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub response: String,
}

pub fn read_cassette(path: &Path) -> Result<Vec<CassetteEntry>, LlmError> {
    let err = |reason: String| LlmError::Cassette {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CassetteEntry =
            serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", n + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

pub struct ReplayClient {
    responses: HashMap<String, Vec<String>>,
}

impl ReplayClient {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::from_entries(read_cassette(path)?))
    }

    pub fn from_entries(entries: impl IntoIterator<Item = CassetteEntry>) -> Self {
        let mut responses: HashMap<String, Vec<String>> = HashMap::new();
        for e in entries {
            responses.entry(e.fingerprint).or_default().push(e.response);
        }
        Self { responses }
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, request: &PromptRequest, attempt: u32) -> Result<String, LlmError> {
        let fingerprint = request.fingerprint();
        let list = self
            .responses
            .get(&fingerprint)
            .ok_or_else(|| LlmError::CassetteMiss {
                fingerprint: fingerprint.clone(),
                sentence_id: request.sentence_id.clone(),
            })?;
        let idx = (attempt.max(1) as usize - 1).min(list.len() - 1);
        Ok(list[idx].clone())
    }
}

/// Forwards to an inner client and appends every response to a cassette.
pub struct RecordingClient<C> {
    inner: C,
    writer: Mutex<BufWriter<File>>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C, path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Cassette {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        Ok(Self {
            inner,
            writer: Mutex::new(BufWriter::new(file)),
        })
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, request: &PromptRequest, attempt: u32) -> Result<String, LlmError> {
        let response = self.inner.complete(request, attempt)?;
        let line = serde_json::to_string(&CassetteEntry {
            fingerprint: request.fingerprint(),
            response: response.clone(),
        })
        .expect("cassette entry serializes");
        let mut w = self.writer.lock().expect("cassette writer poisoned");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| LlmError::Unavailable(format!("cassette write failed: {e}")))?;
        Ok(response)
    }
}

/// Chat-completions client (`POST {endpoint}` with a single user message).
pub struct HttpChatClient {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

impl HttpChatClient {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key,
            client,
        })
    }
}

impl LlmClient for HttpChatClient {
    fn complete(&self, request: &PromptRequest, _attempt: u32) -> Result<String, LlmError> {
        let body = ChatRequest {
            model: &request.model_name,
            messages: [ChatMessage {
                role: "user",
                content: &request.prompt_text,
            }],
            temperature: request.temperature,
            max_tokens: request.max_new_tokens,
        };
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(LlmError::Unavailable(format!("HTTP {}", resp.status())));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| LlmError::Unavailable(format!("bad response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Unavailable("response has no message content".into()))
    }
}
