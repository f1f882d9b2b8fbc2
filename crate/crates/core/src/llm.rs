//! Prompting chat-completion endpoints, with a response cache.
//!
//! Every completion is stored under a key derived from everything that can
//! change the answer (model, prompts, sampling settings), so a benchmark run
//! can be resumed or replayed without touching the network.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::extract::MergeSample;

pub const API_KEY_ENV: &str = "MERGEBENCH_API_KEY";
pub const CACHE_DIR_ENV: &str = "MERGEBENCH_CACHE_DIR";

const PROMPT_HEAD: &str = "You are a merge conflict resolution expert. Below is a snippet of code with surrounding context that includes a merge conflict.
Return the entire snippet (including full context) in Markdown code syntax as provided.
Do not modify the context at all and preserve the spacing as is.
Think in terms of intent and semantics that both sides of the merge are trying to achieve.
If you are not sure on how to resolve the conflict or if the intent is ambiguous, please return the same snippet with the conflict.
Here is the code snippet: \n";

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptBundle {
    pub sample_id: String,
    pub system_text: String,
    pub user_text: String,
}

/// The zero-shot merge prompt for one sample.
pub fn build_prompt(sample: &MergeSample, system_text: &str) -> PromptBundle {
    let user_text = format!("{PROMPT_HEAD}```{}\n{}\n```", sample.language.id(), sample.conflict_text);
    PromptBundle {
        sample_id: sample.id.clone(),
        system_text: system_text.to_string(),
        user_text,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub parallelism: usize,
    pub retry_base_delay_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8000/v1".to_string(),
            model: String::new(),
            temperature: 0.9,
            max_output_tokens: 2048,
            timeout_secs: 300,
            max_retries: 4,
            parallelism: 4,
            retry_base_delay_ms: 500,
        }
    }
}

impl EndpointConfig {
    pub fn request(&self, bundle: &PromptBundle) -> CompletionRequest {
        CompletionRequest {
            model: self.model.clone(),
            system_text: bundle.system_text.clone(),
            user_text: bundle.user_text.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
        }
    }
}

/// Everything that determines a completion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        for part in [self.model.as_str(), &self.system_text, &self.user_text] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        h.update(self.temperature.to_bits().to_le_bytes());
        h.update(self.max_output_tokens.to_le_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("gave up after {attempts} attempts, last error: {last}")]
    Exhausted { attempts: u32, last: Box<EndpointError> },
}

impl EndpointError {
    /// Rate limits, server errors and transport failures are worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            EndpointError::Http { status, .. } => *status == 429 || *status >= 500,
            EndpointError::Transport(_) => true,
            EndpointError::Protocol(_) | EndpointError::Exhausted { .. } => false,
        }
    }
}

pub trait Endpoint: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError>;
}

impl<F> Endpoint for F
where
    F: Fn(&CompletionRequest) -> Result<String, EndpointError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        self(request)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub request: CompletionRequest,
    pub response: String,
}

/// Content-addressed completion cache: `<dir>/<key[..2]>/<key>.json`.
#[derive(Clone, Debug)]
pub struct CacheStore {
    dir: PathBuf,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl CacheStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CacheStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let bytes = fs::read(self.path_for(key)).ok()?;
        match serde_json::from_slice::<CacheEntry>(&bytes) {
            Ok(entry) if entry.key == key => Some(entry),
            Ok(_) | Err(_) => {
                log::warn!("ignoring corrupt cache entry {key}");
                None
            }
        }
    }

    /// Writes to a temporary file and renames it into place, so readers
    /// never see a partial entry.
    pub fn put(&self, entry: &CacheEntry) -> std::io::Result<()> {
        let path = self.path_for(&entry.key);
        let parent = path.parent().expect("cache paths have a parent");
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(
            ".{}.{}.{}.tmp",
            entry.key,
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&serde_json::to_vec_pretty(entry).expect("cache entries serialize"))?;
        file.sync_all()?;
        fs::rename(&tmp, &path)
    }
}

/// Calls the endpoint, retrying retryable failures with exponential backoff.
pub fn complete_with_retry(endpoint: &dyn Endpoint, request: &CompletionRequest, config: &EndpointConfig) -> Result<String, EndpointError> {
    let mut attempt = 0;
    loop {
        match endpoint.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt < config.max_retries => {
                let delay = config.retry_base_delay_ms.saturating_mul(1 << attempt.min(16));
                log::debug!("attempt {} failed ({e}); retrying in {delay} ms", attempt + 1);
                thread::sleep(Duration::from_millis(delay));
                attempt += 1;
            }
            Err(e) if attempt == 0 => return Err(e),
            Err(e) => {
                return Err(EndpointError::Exhausted {
                    attempts: attempt + 1,
                    last: Box::new(e),
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub cached: bool,
}

/// Cached completion for `bundle`, or a fresh one which is then cached.
pub fn complete(bundle: &PromptBundle, config: &EndpointConfig, endpoint: &dyn Endpoint, cache: &CacheStore) -> Result<Completion, EndpointError> {
    let request = config.request(bundle);
    let key = request.cache_key();
    if let Some(entry) = cache.get(&key) {
        return Ok(Completion {
            text: entry.response,
            cached: true,
        });
    }
    let text = complete_with_retry(endpoint, &request, config)?;
    let entry = CacheEntry {
        key,
        request,
        response: text.clone(),
    };
    if let Err(e) = cache.put(&entry) {
        log::warn!("could not cache completion for {}: {e}", bundle.sample_id);
    }
    Ok(Completion { text, cached: false })
}

/// Outcome for one sample of a benchmark run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub sample_id: String,
    pub result: Result<Completion, EndpointError>,
}

/// Completes every sample with at most `config.parallelism` requests in
/// flight. Records come back in dataset order.
pub fn run_benchmark(
    samples: &[MergeSample],
    system_text: &str,
    config: &EndpointConfig,
    endpoint: &dyn Endpoint,
    cache: &CacheStore,
) -> Vec<RunRecord> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        samples
            .par_iter()
            .with_max_len(1)
            .map(|sample| {
                let bundle = build_prompt(sample, system_text);
                let result = complete(&bundle, config, endpoint, cache);
                if let Err(e) = &result {
                    log::warn!("sample {}: {e}", sample.id);
                }
                RunRecord {
                    sample_id: sample.id.clone(),
                    result,
                }
            })
            .collect()
    })
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: Option<String>,
    #[serde(default)]
    reasoning_content: Option<String>,
}

/// JSON body of a chat-completion request.
pub fn request_body(request: &CompletionRequest) -> String {
    let mut messages = Vec::new();
    if !request.system_text.is_empty() {
        messages.push(WireMessage {
            role: "system",
            content: &request.system_text,
        });
    }
    messages.push(WireMessage {
        role: "user",
        content: &request.user_text,
    });
    serde_json::to_string(&WireRequest {
        model: &request.model,
        messages,
        temperature: request.temperature,
        max_tokens: request.max_output_tokens,
    })
    .expect("request serializes")
}

/// Text of the first choice. Endpoints that return reasoning separately get
/// it wrapped back into a `<think>` span in front of the answer.
pub fn parse_response(body: &str) -> Result<String, EndpointError> {
    let parsed: WireResponse = serde_json::from_str(body).map_err(|e| EndpointError::Protocol(e.to_string()))?;
    let choice = parsed
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| EndpointError::Protocol("no choices".to_string()))?;
    let content = choice.message.content.unwrap_or_default();
    Ok(match choice.message.reasoning_content {
        Some(r) if !r.is_empty() => format!("<think>{r}</think>\n{content}"),
        _ => content,
    })
}

#[cfg(feature = "http")]
pub use http::HttpEndpoint;

#[cfg(feature = "http")]
mod http {
    use super::*;

    /// `POST {base_url}/chat/completions` with bearer authentication.
    pub struct HttpEndpoint {
        agent: ureq::Agent,
        url: String,
        api_key: Option<String>,
    }

    impl HttpEndpoint {
        pub fn new(config: &EndpointConfig, api_key: Option<String>) -> Self {
            let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(config.timeout_secs)).build();
            HttpEndpoint {
                agent,
                url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
                api_key,
            }
        }
    }

    impl Endpoint for HttpEndpoint {
        fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
            let mut call = self.agent.post(&self.url).set("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                call = call.set("Authorization", &format!("Bearer {key}"));
            }
            match call.send_string(&request_body(request)) {
                Ok(resp) => {
                    let body = resp.into_string().map_err(|e| EndpointError::Transport(e.to_string()))?;
                    parse_response(&body)
                }
                Err(ureq::Error::Status(status, resp)) => Err(EndpointError::Http {
                    status,
                    body: resp.into_string().unwrap_or_default(),
                }),
                Err(ureq::Error::Transport(t)) => Err(EndpointError::Transport(t.to_string())),
            }
        }
    }
}
