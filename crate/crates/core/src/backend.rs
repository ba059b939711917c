//! Completion backends: an HTTP client, a lookup oracle and a simulated model.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::composer::{parse_example_line, parse_query_line, Manifest, ParsedQuery, ShotKind};
use crate::corpus::{fqn_length, length_bucket, usage_bucket, Corpus, FqnStats, StatsIndex};
use crate::rng;

pub const API_KEY_ENV: &str = "FQN_PROBE_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RequestMetadata {
    pub snippet_id: Option<String>,
    /// Unique key of the task input; the simulated model derives its draws from it.
    pub file_name: Option<String>,
    pub shot: Option<ShotKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub text: String,
    pub max_new_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub metadata: RequestMetadata,
}

impl CompletionRequest {
    pub fn new(text: impl Into<String>) -> Self {
        CompletionRequest {
            text: text.into(),
            max_new_tokens: 64,
            stop_sequences: vec!["\n".to_string()],
            metadata: RequestMetadata::default(),
        }
    }

    pub fn with_metadata(mut self, metadata: RequestMetadata) -> Self {
        self.metadata = metadata;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Text(String),
    NoCompletion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    pub outcome: Outcome,
    pub latency_ms: u64,
}

impl CompletionResult {
    /// Empty text is recorded as no completion.
    pub fn text(raw: &str) -> Self {
        let outcome = if raw.is_empty() {
            Outcome::NoCompletion
        } else {
            Outcome::Text(raw.to_string())
        };
        CompletionResult {
            outcome,
            latency_ms: 0,
        }
    }

    pub fn none() -> Self {
        CompletionResult {
            outcome: Outcome::NoCompletion,
            latency_ms: 0,
        }
    }

    pub fn with_latency(mut self, latency_ms: u64) -> Self {
        self.latency_ms = latency_ms;
        self
    }

    pub fn raw(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Text(t) => Some(t),
            Outcome::NoCompletion => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("authentication failed (HTTP {0})")]
    Auth(u16),
    #[error("endpoint returned HTTP {0}")]
    Status(u16),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
    #[error("empty request text")]
    EmptyRequest,
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Timeout(_) => true,
            BackendError::Status(code) => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;
}

/// The example lines directly above the query and the parsed query itself.
fn parse_prompt_tail(text: &str) -> Option<(Vec<(String, String)>, ParsedQuery)> {
    let mut lines = text.lines().rev();
    let query = parse_query_line(lines.next()?)?;
    let mut examples: Vec<(String, String)> = lines.map_while(parse_example_line).collect();
    examples.reverse();
    Some((examples, query))
}

fn render_answer(fqn: &str, quoted: bool) -> String {
    if quoted {
        format!(" \"{fqn}\"")
    } else {
        format!(" {fqn}")
    }
}

/// Answers every query from a `(snippet id, simple name) -> FQN` table.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    table: HashMap<(String, String), String>,
}

impl OracleBackend {
    pub fn from_manifest(manifest: &Manifest) -> Self {
        let table = manifest
            .records
            .iter()
            .map(|r| ((r.snippet_id.clone(), r.target.clone()), r.gold_fqn.clone()))
            .collect();
        OracleBackend { table }
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        let table = corpus
            .all_pairs()
            .map(|p| ((p.snippet_id.clone(), p.simple_name.clone()), p.fqn.clone()))
            .collect();
        OracleBackend { table }
    }

    /// The gold continuation for a task input, or `None` on a miss.
    pub fn lookup(&self, snippet_id: &str, text: &str) -> Option<String> {
        let query = parse_query_line(text.lines().last()?)?;
        let fqn = self
            .table
            .get(&(snippet_id.to_string(), query.simple_name))?;
        Some(render_answer(fqn, query.quoted))
    }
}

impl CompletionBackend for OracleBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        if request.text.is_empty() {
            return Err(BackendError::EmptyRequest);
        }
        let snippet = request.metadata.snippet_id.as_deref().unwrap_or("");
        Ok(match self.lookup(snippet, &request.text) {
            Some(answer) => CompletionResult::text(&answer),
            None => CompletionResult::none(),
        })
    }
}

/// One probability per shot setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotTable {
    pub zero: f64,
    #[serde(rename = "one-enic")]
    pub one_enic: f64,
    pub one: f64,
    #[serde(rename = "few-rep")]
    pub few_rep: f64,
    #[serde(rename = "few-loo")]
    pub few_loo: f64,
}

impl ShotTable {
    pub fn get(&self, shot: ShotKind) -> f64 {
        match shot {
            ShotKind::Zero => self.zero,
            ShotKind::OneEnic => self.one_enic,
            ShotKind::One => self.one,
            ShotKind::FewRep => self.few_rep,
            ShotKind::FewLoo => self.few_loo,
        }
    }
}

/// Parameters of the simulated model's recall probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallParams {
    #[serde(default)]
    pub version: u32,
    pub base: ShotTable,
    pub usage_gain: [f64; 4],
    pub length_penalty: [f64; 4],
    pub in_context_bonus: f64,
    #[serde(default)]
    pub seed: u64,
}

const RECALL_DEFAULTS: &str = include_str!("../data/recall_defaults.json");

impl Default for RecallParams {
    fn default() -> Self {
        serde_json::from_str(RECALL_DEFAULTS).expect("shipped recall defaults parse")
    }
}

impl RecallParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::Config(m.to_string()));
        let base: Vec<f64> = ShotKind::ALL.iter().map(|&s| self.base.get(s)).collect();
        if base.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("base probabilities must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.in_context_bonus) {
            return bad("in_context_bonus must lie in [0, 1]");
        }
        if self
            .usage_gain
            .iter()
            .chain(&self.length_penalty)
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return bad("weights must be finite and non-negative");
        }
        if self.usage_gain.windows(2).any(|w| w[0] > w[1]) {
            return bad("usage_gain must be non-decreasing");
        }
        if self.length_penalty.windows(2).any(|w| w[0] < w[1]) {
            return bad("length_penalty must be non-increasing");
        }
        Ok(())
    }
}

pub fn stochastic_recall_probability(
    stats: &FqnStats,
    shot: ShotKind,
    in_context: bool,
    params: &RecallParams,
) -> f64 {
    let u = usage_bucket(stats.usage_count) as usize;
    let l = length_bucket(stats.length_tokens) as usize;
    let bonus = if in_context {
        params.in_context_bonus
    } else {
        0.0
    };
    (params.base.get(shot) * params.usage_gain[u] * params.length_penalty[l] + bonus)
        .clamp(0.0, 1.0)
}

/// A simulated model whose recall depends on FQN usage, FQN length and the
/// shot setting.
#[derive(Debug, Clone)]
pub struct StochasticBackend {
    gold: HashMap<(String, String), String>,
    names_by_snippet: HashMap<String, BTreeSet<String>>,
    stats: StatsIndex,
    params: RecallParams,
    vocabulary: Vec<String>,
}

impl StochasticBackend {
    pub fn new(
        corpus: &Corpus,
        stats: StatsIndex,
        params: RecallParams,
    ) -> Result<Self, BackendError> {
        params.validate()?;
        let mut gold = HashMap::new();
        let mut names_by_snippet: HashMap<String, BTreeSet<String>> = HashMap::new();
        let mut vocab = BTreeSet::new();
        for p in corpus.all_pairs() {
            gold.insert((p.snippet_id.clone(), p.simple_name.clone()), p.fqn.clone());
            names_by_snippet
                .entry(p.snippet_id.clone())
                .or_default()
                .insert(p.simple_name.clone());
            let tokens: Vec<&str> = p.fqn.split('.').collect();
            for t in &tokens[..tokens.len() - 1] {
                if t.starts_with(|c: char| c.is_ascii_lowercase()) {
                    vocab.insert(t.to_string());
                }
            }
        }
        Ok(StochasticBackend {
            gold,
            names_by_snippet,
            stats,
            params,
            vocabulary: vocab.into_iter().collect(),
        })
    }

    pub fn params(&self) -> &RecallParams {
        &self.params
    }

    fn stats_for(&self, fqn: &str) -> FqnStats {
        self.stats.get(fqn).cloned().unwrap_or_else(|| FqnStats {
            fqn: fqn.to_string(),
            length_tokens: fqn_length(fqn),
            usage_count: 1,
            sn_fqn: 1,
            fqn_sn: 1,
        })
    }

    fn infer_shot(
        &self,
        examples: &[(String, String)],
        snippet_names: Option<&BTreeSet<String>>,
        target: &str,
    ) -> (ShotKind, bool) {
        let in_snippet = |name: &str| snippet_names.is_some_and(|s| s.contains(name));
        let in_context = examples.iter().any(|(n, _)| in_snippet(n));
        let shot = match examples.len() {
            0 => ShotKind::Zero,
            1 if in_context => ShotKind::One,
            1 => ShotKind::OneEnic,
            k => {
                let others = snippet_names.map_or(0, |s| s.iter().filter(|n| *n != target).count());
                if k >= others {
                    ShotKind::FewLoo
                } else {
                    ShotKind::FewRep
                }
            }
        };
        (shot, in_context)
    }

    /// Replaces one package token with a different vocabulary token.
    fn corrupt(&self, fqn: &str, rng: &mut impl Rng) -> String {
        let mut tokens: Vec<String> = fqn.split('.').map(str::to_string).collect();
        let interior = tokens.len().saturating_sub(1).max(1);
        let at = rng.random_range(0..interior);
        let alternatives: Vec<&String> = self
            .vocabulary
            .iter()
            .filter(|v| **v != tokens[at])
            .collect();
        if alternatives.is_empty() {
            tokens[at].push('x');
        } else {
            tokens[at] = alternatives[rng.random_range(0..alternatives.len())].clone();
        }
        tokens.join(".")
    }
}

impl CompletionBackend for StochasticBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        if request.text.is_empty() {
            return Err(BackendError::EmptyRequest);
        }
        let Some((examples, query)) = parse_prompt_tail(&request.text) else {
            return Ok(CompletionResult::none());
        };
        let snippet = request.metadata.snippet_id.as_deref().unwrap_or("");
        let Some(fqn) = self
            .gold
            .get(&(snippet.to_string(), query.simple_name.clone()))
        else {
            return Ok(CompletionResult::none());
        };
        let (inferred, in_context) = self.infer_shot(
            &examples,
            self.names_by_snippet.get(snippet),
            &query.simple_name,
        );
        let shot = request.metadata.shot.unwrap_or(inferred);
        let p = stochastic_recall_probability(&self.stats_for(fqn), shot, in_context, &self.params);

        let key = request
            .metadata
            .file_name
            .as_deref()
            .unwrap_or(&request.text);
        let mut rng = rng::seeded(self.params.seed, &["stochastic", snippet, key]);
        let draw: f64 = rng.random();
        if draw < p {
            Ok(CompletionResult::text(&render_answer(fqn, query.quoted)))
        } else if rng.random_bool(0.5) {
            Ok(CompletionResult::none())
        } else {
            let wrong = self.corrupt(fqn, &mut rng);
            Ok(CompletionResult::text(&render_answer(&wrong, query.quoted)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    pub path: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub concurrency: usize,
    /// Header carrying the API key; `None` sends no credentials.
    pub auth_header: Option<String>,
    /// Prepended to the key, e.g. `"Bearer "`.
    pub auth_prefix: String,
    pub backoff_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://127.0.0.1:8080".to_string(),
            path: "/v1/completions".to_string(),
            timeout_ms: 30_000,
            retries: 2,
            concurrency: 1,
            auth_header: Some("Authorization".to_string()),
            auth_prefix: "Bearer ".to_string(),
            backoff_ms: 200,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Serialize)]
struct HttpRequestBody<'a> {
    prompt: &'a str,
    max_tokens: u32,
    stop: &'a [String],
}

#[derive(Deserialize)]
struct HttpResponseBody {
    choices: Vec<HttpChoice>,
}

#[derive(Deserialize)]
struct HttpChoice {
    #[serde(default)]
    text: Option<String>,
}

/// Client for a completion endpoint speaking `{prompt, max_tokens, stop}`.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    gate: Semaphore,
}

impl HttpBackend {
    /// Reads the API key from the environment when an auth header is configured.
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let key = match &config.auth_header {
            Some(_) => Some(
                std::env::var(API_KEY_ENV)
                    .map_err(|_| BackendError::Config(format!("{API_KEY_ENV} is not set")))?,
            ),
            None => None,
        };
        Self::with_key(config, key)
    }

    pub fn with_key(config: HttpConfig, api_key: Option<String>) -> Result<Self, BackendError> {
        if config.auth_header.is_some() && api_key.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::Config(
                "auth header configured without an API key".into(),
            ));
        }
        if config.timeout_ms == 0 {
            return Err(BackendError::Config("timeout_ms must be positive".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            gate: Semaphore::new(config.concurrency),
            config,
            api_key,
            agent,
        })
    }

    pub fn url(&self) -> String {
        format!(
            "{}/{}",
            self.config.base_url.trim_end_matches('/'),
            self.config.path.trim_start_matches('/')
        )
    }

    fn attempt(&self, body: &str) -> Result<CompletionResult, BackendError> {
        let _permit = self.gate.acquire();
        let started = Instant::now();
        let mut req = self
            .agent
            .post(&self.url())
            .header("Content-Type", "application/json");
        if let (Some(header), Some(key)) = (&self.config.auth_header, &self.api_key) {
            req = req.header(header.as_str(), format!("{}{key}", self.config.auth_prefix));
        }
        let mut response = req.send(body).map_err(|e| self.map_error(e))?;
        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            return Err(BackendError::Auth(status));
        }
        if !(200..300).contains(&status) {
            return Err(BackendError::Status(status));
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| self.map_error(e))?;
        let parsed: HttpResponseBody = serde_json::from_str(&text)
            .map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
        let latency = started.elapsed().as_millis() as u64;
        // an empty choice list is how endpoints report that nothing was found
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.text)
            .unwrap_or_default();
        Ok(CompletionResult::text(&text).with_latency(latency))
    }

    fn map_error(&self, err: ureq::Error) -> BackendError {
        match err {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.config.timeout_ms),
            ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => {
                BackendError::Timeout(self.config.timeout_ms)
            }
            ureq::Error::StatusCode(code) => BackendError::Status(code),
            other => BackendError::Transport(other.to_string()),
        }
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        if request.text.is_empty() {
            return Err(BackendError::EmptyRequest);
        }
        let body = serde_json::to_string(&HttpRequestBody {
            prompt: &request.text,
            max_tokens: request.max_new_tokens,
            stop: &request.stop_sequences,
        })
        .map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(
                        self.config.backoff_ms * attempt as u64,
                    ));
                }
                other => return other,
            }
        }
    }
}
