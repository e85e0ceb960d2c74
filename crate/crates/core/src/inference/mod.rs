//! Chat-completions client, reply parsing and the resumable batch runner.

pub mod mock;
mod parse;

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::TdmsQuadruple;
use crate::error::{Error, Result};
use crate::promptgen::PromptInstance;

pub use parse::{parse_prediction, Parsed, ParsedKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_backoff_ms: 1000,
        }
    }
}

impl RetryPolicy {
    /// Wait before retry number `attempt` (1-based): base, 2·base, 4·base, ...
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(16);
        Duration::from_millis(self.base_backoff_ms.saturating_mul(factor))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env_var: String,
    /// Fail before sending anything when the variable is unset.
    pub auth_required: bool,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub request_timeout_secs: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            endpoint_url: String::new(),
            model_name: String::new(),
            auth_env_var: "LBX_API_KEY".into(),
            auth_required: true,
            temperature: 0.0,
            max_output_tokens: 512,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            request_timeout_secs: 120,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        reqwest::Url::parse(&self.endpoint_url)
            .map_err(|e| Error::Config(format!("endpoint_url {:?}: {e}", self.endpoint_url)))?;
        if self.retry.max_attempts < 1 {
            return Err(Error::Config("retry.max_attempts must be at least 1".into()));
        }
        if self.max_in_flight < 1 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Config("temperature must be non-negative".into()));
        }
        Ok(())
    }

    fn token(&self) -> Result<Option<String>> {
        match std::env::var(&self.auth_env_var) {
            Ok(v) if !v.is_empty() => Ok(Some(v)),
            _ if self.auth_required => Err(Error::MissingAuth(self.auth_env_var.clone())),
            _ => Ok(None),
        }
    }
}

/// A blocking client bound to one configuration.
pub struct ChatClient {
    cfg: InferenceConfig,
    http: Client,
    token: Option<String>,
}

impl ChatClient {
    pub fn new(cfg: &InferenceConfig) -> Result<Self> {
        cfg.validate()?;
        let token = cfg.token()?;
        let http = Client::builder()
            .timeout(Duration::from_secs(cfg.request_timeout_secs))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(ChatClient {
            cfg: cfg.clone(),
            http,
            token,
        })
    }

    fn attempt(&self, body: &Value) -> std::result::Result<String, (bool, Error)> {
        let mut req = self.http.post(&self.cfg.endpoint_url).json(body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| (true, Error::Transport(e.to_string())))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| (true, Error::Transport(e.to_string())))?;
        if !(200..300).contains(&status) {
            let retryable = status == 429 || status >= 500;
            return Err((retryable, Error::HttpStatus { status, body: text }));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| (false, Error::Response(format!("invalid JSON: {e}"))))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| (false, Error::Response("missing choices[0].message.content".into())))
    }

    /// Sends `prompt` as a single user message and returns the reply text.
    /// 429, 5xx and transport errors are retried with exponential backoff.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        let body = json!({
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        });
        let mut attempt = 1;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((true, e)) if attempt < self.cfg.retry.max_attempts => {
                    log::warn!("attempt {attempt} failed: {e}; retrying");
                    thread::sleep(self.cfg.retry.backoff(attempt));
                    attempt += 1;
                }
                Err((_, e)) => return Err(e),
            }
        }
    }
}

pub fn complete_one(prompt: &str, cfg: &InferenceConfig) -> Result<String> {
    ChatClient::new(cfg)?.complete(prompt)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelPrediction {
    pub paper_id: String,
    pub template_id: u32,
    /// The reply exactly as received.
    pub raw: String,
    pub parsed: Parsed,
}

impl ModelPrediction {
    pub fn from_raw(paper_id: &str, template_id: u32, raw: String) -> Self {
        let parsed = parse_prediction(&raw);
        ModelPrediction {
            paper_id: paper_id.to_owned(),
            template_id,
            raw,
            parsed,
        }
    }

    pub fn key(&self) -> (&str, u32) {
        (&self.paper_id, self.template_id)
    }
}

#[derive(Serialize, Deserialize)]
struct PredictionLine {
    paper_id: String,
    template_id: u32,
    raw: String,
    parsed_kind: ParsedKind,
    quadruples: Vec<TdmsQuadruple>,
}

impl From<&ModelPrediction> for PredictionLine {
    fn from(p: &ModelPrediction) -> Self {
        PredictionLine {
            paper_id: p.paper_id.clone(),
            template_id: p.template_id,
            raw: p.raw.clone(),
            parsed_kind: p.parsed.kind(),
            quadruples: p.parsed.quadruples().to_vec(),
        }
    }
}

impl PredictionLine {
    fn into_prediction(self) -> ModelPrediction {
        let parsed = match self.parsed_kind {
            ParsedKind::Answerable if !self.quadruples.is_empty() => Parsed::Answerable(self.quadruples),
            ParsedKind::Unanswerable => Parsed::Unanswerable,
            // Failure reasons are not stored; parsing is deterministic.
            _ => match parse_prediction(&self.raw) {
                Parsed::ParseFailure(r) => Parsed::ParseFailure(r),
                _ => Parsed::ParseFailure("stored as parse failure".into()),
            },
        };
        ModelPrediction {
            paper_id: self.paper_id,
            template_id: self.template_id,
            raw: self.raw,
            parsed,
        }
    }
}

pub fn prediction_line(p: &ModelPrediction) -> String {
    serde_json::to_string(&PredictionLine::from(p)).expect("prediction serializes")
}

/// Reads a predictions or checkpoint file. A torn final line, left by an
/// interrupted write, is skipped with a warning.
pub fn read_predictions(path: &Path) -> Result<Vec<ModelPrediction>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str::<PredictionLine>(line) {
            Ok(p) => out.push(p.into_prediction()),
            Err(e) if i + 1 == lines.len() && !text.ends_with('\n') => {
                log::warn!("{}: ignoring incomplete last line: {e}", path.display());
            }
            Err(e) => {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, preds: &[ModelPrediction]) -> Result<()> {
    let mut buf = String::new();
    for p in preds {
        buf.push_str(&prediction_line(p));
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Cuts an unterminated last line so appends start on a fresh line.
fn drop_torn_tail(path: &Path) -> Result<()> {
    let Ok(bytes) = fs::read(path) else { return Ok(()) };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let f = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
    f.set_len(keep as u64).map_err(|e| Error::io(path, e))
}

/// Runs every instance not already in the checkpoint.
///
/// At most `max_in_flight` requests are open at once. Each reply is appended
/// to the checkpoint and synced before it counts as done. Requests that still
/// fail after retries become `ParseFailure("transport: ...")` and are left out
/// of the checkpoint, so a rerun tries them again. Output follows input order.
pub fn run_batch(instances: &[PromptInstance], cfg: &InferenceConfig, checkpoint: &Path) -> Result<Vec<ModelPrediction>> {
    let mut done: HashMap<(String, u32), ModelPrediction> = HashMap::new();
    if checkpoint.exists() {
        for p in read_predictions(checkpoint)? {
            done.insert((p.paper_id.clone(), p.template_id), p);
        }
    }
    let mut pending: Vec<usize> = Vec::new();
    let mut queued = std::collections::HashSet::new();
    for (i, inst) in instances.iter().enumerate() {
        let key = (inst.paper_id.clone(), inst.template_id);
        if !done.contains_key(&key) && queued.insert(key) {
            pending.push(i);
        }
    }
    log::info!("{} of {} instances already checkpointed", instances.len() - pending.len(), instances.len());

    let mut failed: HashMap<(String, u32), ModelPrediction> = HashMap::new();
    if !pending.is_empty() {
        let client = ChatClient::new(cfg)?;
        drop_torn_tail(checkpoint)?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(checkpoint)
            .map_err(|e| Error::io(checkpoint, e))?;
        let next = AtomicUsize::new(0);
        let workers = cfg.max_in_flight.min(pending.len());
        let (tx, rx) = mpsc::channel::<(usize, Result<String>)>();
        thread::scope(|s| -> Result<()> {
            for _ in 0..workers {
                let tx = tx.clone();
                let (client, next, pending) = (&client, &next, &pending);
                s.spawn(move || loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&idx) = pending.get(k) else { break };
                    let res = client.complete(&instances[idx].prompt);
                    if tx.send((idx, res)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (idx, res) in rx {
                let inst = &instances[idx];
                let key = (inst.paper_id.clone(), inst.template_id);
                match res {
                    Ok(raw) => {
                        let p = ModelPrediction::from_raw(&inst.paper_id, inst.template_id, raw);
                        writeln!(file, "{}", prediction_line(&p))
                            .and_then(|_| file.sync_data())
                            .map_err(|e| Error::io(checkpoint, e))?;
                        done.insert(key, p);
                    }
                    Err(e) => {
                        log::error!("{} / template {}: {e}", inst.paper_id, inst.template_id);
                        let p = ModelPrediction {
                            paper_id: inst.paper_id.clone(),
                            template_id: inst.template_id,
                            raw: String::new(),
                            parsed: Parsed::ParseFailure(format!("transport: {e}")),
                        };
                        failed.insert(key, p);
                    }
                }
            }
            Ok(())
        })?;
    }

    Ok(instances
        .iter()
        .map(|inst| {
            let key = (inst.paper_id.clone(), inst.template_id);
            done.get(&key).or_else(|| failed.get(&key)).cloned().expect("every instance resolved")
        })
        .collect())
}
