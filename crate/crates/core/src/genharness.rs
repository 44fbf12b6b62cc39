//! Sample collection from text-generation endpoints and multiple-choice
//! benchmark scoring.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex, OnceLock};
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::corpus::ResponseRecord;
use crate::error::{Error, Result};
use crate::http;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Wire format spoken by the endpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseShape {
    /// `{"model","prompt","temperature","max_tokens","seed"}` → `{"text"}`
    #[default]
    Simple,
    /// Same request; reply `choices[0].text` or `choices[0].message.content`.
    OpenAi,
    /// Ollama `/api/generate`: options object, reply `{"response"}`.
    Ollama,
}

impl ResponseShape {
    pub fn request_body(self, model: &str, prompt: &str, params: &GenerationParams) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), json!(model));
        body.insert("prompt".into(), json!(prompt));
        match self {
            ResponseShape::Simple | ResponseShape::OpenAi => {
                if let Some(t) = params.temperature {
                    body.insert("temperature".into(), json!(t));
                }
                if let Some(m) = params.max_tokens {
                    body.insert("max_tokens".into(), json!(m));
                }
                if let Some(s) = params.seed {
                    body.insert("seed".into(), json!(s));
                }
            }
            ResponseShape::Ollama => {
                let mut options = Map::new();
                if let Some(t) = params.temperature {
                    options.insert("temperature".into(), json!(t));
                }
                if let Some(m) = params.max_tokens {
                    options.insert("num_predict".into(), json!(m));
                }
                if let Some(s) = params.seed {
                    options.insert("seed".into(), json!(s));
                }
                body.insert("stream".into(), json!(false));
                body.insert("options".into(), Value::Object(options));
            }
        }
        Value::Object(body)
    }

    pub fn extract_text(self, reply: &Value) -> Option<String> {
        let text = match self {
            ResponseShape::Simple => reply.get("text"),
            ResponseShape::Ollama => reply.get("response"),
            ResponseShape::OpenAi => {
                let first = reply.get("choices")?.get(0)?;
                first
                    .get("text")
                    .or_else(|| first.get("message").and_then(|m| m.get("content")))
            }
        };
        text.and_then(Value::as_str).map(str::to_string)
    }
}

/// Anything that turns a prompt into generated text.
pub trait Completer: Send + Sync {
    fn complete(&self, model: &str, prompt: &str, params: &GenerationParams) -> Result<String>;
}

impl<F> Completer for F
where
    F: Fn(&str, &str, &GenerationParams) -> Result<String> + Send + Sync,
{
    fn complete(&self, model: &str, prompt: &str, params: &GenerationParams) -> Result<String> {
        self(model, prompt, params)
    }
}

#[derive(Debug, Clone)]
pub struct HttpCompleter {
    endpoint: String,
    shape: ResponseShape,
    agent: ureq::Agent,
}

impl HttpCompleter {
    pub fn new(endpoint: impl Into<String>, shape: ResponseShape, timeout: Duration) -> Self {
        HttpCompleter {
            endpoint: endpoint.into(),
            shape,
            agent: http::agent(timeout),
        }
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, model: &str, prompt: &str, params: &GenerationParams) -> Result<String> {
        let fail = |reason: String| Error::Provider {
            endpoint: self.endpoint.clone(),
            reason,
        };
        let body = self.shape.request_body(model, prompt, params);
        let reply = http::post_json(&self.agent, &self.endpoint, &body).map_err(fail)?;
        self.shape
            .extract_text(&reply)
            .ok_or_else(|| fail(format!("reply has no text for shape {:?}", self.shape)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub retries: usize,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 2,
            backoff_ms: 250,
        }
    }
}

/// Calls `completer`, retrying with exponential backoff. Returns the text and
/// the number of retries spent.
fn complete_with_retry(
    completer: &dyn Completer,
    model: &str,
    prompt: &str,
    params: &GenerationParams,
    policy: RetryPolicy,
) -> (Result<String>, usize) {
    let mut attempt = 0;
    loop {
        match completer.complete(model, prompt, params) {
            Ok(text) => return (Ok(text), attempt),
            Err(e) if attempt < policy.retries => {
                let wait = policy.backoff_ms.saturating_mul(1 << attempt.min(16));
                log::warn!(
                    "attempt {} failed ({e}); retrying in {wait} ms",
                    attempt + 1
                );
                thread::sleep(Duration::from_millis(wait));
                attempt += 1;
            }
            Err(e) => return (Err(e), attempt),
        }
    }
}

/// Runs `work` over `jobs` on `parallelism` threads, handing each result to
/// `sink` on the calling thread as it completes.
fn run_bounded<J, R>(
    jobs: Vec<J>,
    parallelism: usize,
    work: impl Fn(J) -> R + Sync,
    mut sink: impl FnMut(R) -> Result<()>,
) -> Result<()>
where
    J: Send,
    R: Send,
{
    let queue = Mutex::new(jobs.into_iter());
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..parallelism.max(1) {
            let tx = tx.clone();
            let queue = &queue;
            let work = &work;
            scope.spawn(move || loop {
                let next = queue.lock().unwrap_or_else(|e| e.into_inner()).next();
                let Some(job) = next else { break };
                if tx.send(work(job)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut outcome = Ok(());
        for r in rx {
            if outcome.is_ok() {
                outcome = sink(r);
            }
        }
        outcome
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub prompt_id: String,
    pub text: String,
}

fn default_samples() -> usize {
    1
}
fn default_parallelism() -> usize {
    1
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> usize {
    RetryPolicy::default().retries
}
fn default_backoff() -> u64 {
    RetryPolicy::default().backoff_ms
}

/// One model's sampling run, as read from a TOML config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTask {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub shape: ResponseShape,
    #[serde(default)]
    pub prompts: Vec<Prompt>,
    #[serde(default = "default_samples")]
    pub samples_per_prompt: usize,
    #[serde(default)]
    pub params: GenerationParams,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Output JSONL path; relative paths resolve against the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl GenerationTask {
    pub fn from_toml(text: &str) -> Result<Self> {
        let task: GenerationTask =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        task.validate()?;
        Ok(task)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut task = Self::from_toml(&text)?;
        if let (Some(out), Some(dir)) = (&task.output, path.parent()) {
            if out.is_relative() {
                task.output = Some(dir.join(out));
            }
        }
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_prompt == 0 {
            return Err(Error::Config(
                "samples_per_prompt must be at least 1".into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if self.timeout_secs == 0 {
            return Err(Error::Config("timeout_secs must be positive".into()));
        }
        Ok(())
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            retries: self.retries,
            backoff_ms: self.backoff_ms,
        }
    }

    pub fn http_completer(&self) -> HttpCompleter {
        HttpCompleter::new(
            &self.endpoint,
            self.shape,
            Duration::from_secs(self.timeout_secs),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub prompt_id: String,
    pub sample_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationSummary {
    /// Records in the order they were written.
    pub records: Vec<ResponseRecord>,
    pub retries: usize,
    pub failures: Vec<GenerationFailure>,
}

/// Samples every prompt `samples_per_prompt` times and appends one JSONL
/// record per success to `out`, flushing after each. With a base seed, sample
/// `i` is requested with seed `base + i`.
pub fn generate_samples(
    task: &GenerationTask,
    completer: &dyn Completer,
    out: impl AsRef<Path>,
) -> Result<GenerationSummary> {
    task.validate()?;
    let out = out.as_ref();
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .map_err(|e| Error::io(out, e))?;

    let jobs: Vec<(&Prompt, usize)> = task
        .prompts
        .iter()
        .flat_map(|p| (0..task.samples_per_prompt).map(move |i| (p, i)))
        .collect();
    let retries = AtomicUsize::new(0);
    let policy = task.retry_policy();
    let mut summary = GenerationSummary::default();

    run_bounded(
        jobs,
        task.parallelism,
        |(prompt, i)| {
            let params = GenerationParams {
                seed: task.params.seed.map(|s| s.wrapping_add(i as u64)),
                ..task.params.clone()
            };
            let (result, spent) =
                complete_with_retry(completer, &task.model, &prompt.text, &params, policy);
            retries.fetch_add(spent, Ordering::Relaxed);
            (prompt, i, params, result)
        },
        |(prompt, i, params, result)| {
            match result {
                Ok(text) => {
                    let mut record =
                        ResponseRecord::new(&task.model, &prompt.prompt_id, &prompt.text, text);
                    record
                        .meta
                        .insert("params".into(), serde_json::to_value(&params)?);
                    record.meta.insert("sample_index".into(), json!(i));
                    writeln!(file, "{}", record.to_json_line())
                        .and_then(|_| file.flush())
                        .map_err(|e| Error::io(out, e))?;
                    summary.records.push(record);
                }
                Err(e) => {
                    log::error!("prompt {} sample {i}: giving up: {e}", prompt.prompt_id);
                    summary.failures.push(GenerationFailure {
                        prompt_id: prompt.prompt_id.clone(),
                        sample_index: i,
                        error: e.to_string(),
                    });
                }
            }
            Ok(())
        },
    )?;
    summary.retries = retries.into_inner();
    Ok(summary)
}

// ---------------------------------------------------------------------------
// benchmark scoring

pub const CHOICE_LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];
pub const DEFAULT_TEMPLATE: &str = "Question: {question}\n{choices}\nAnswer:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchItem {
    pub item_id: String,
    pub question: String,
    pub choices: Vec<Choice>,
    pub answer_label: String,
}

impl BenchItem {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(2..=5).contains(&self.choices.len()) {
            return Err(format!(
                "item {}: expected 2-5 choices, got {}",
                self.item_id,
                self.choices.len()
            ));
        }
        for c in &self.choices {
            if !CHOICE_LABELS.contains(&c.label.as_str()) {
                return Err(format!(
                    "item {}: label `{}` is not one of A-E",
                    self.item_id, c.label
                ));
            }
        }
        if !self.choices.iter().any(|c| c.label == self.answer_label) {
            return Err(format!(
                "item {}: answer `{}` is not among the choice labels",
                self.item_id, self.answer_label
            ));
        }
        Ok(())
    }
}

pub fn load_bench_items(path: impl AsRef<Path>) -> Result<Vec<BenchItem>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLine {
            line: idx + 1,
            reason,
        };
        let item: BenchItem = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        item.validate().map_err(malformed)?;
        items.push(item);
    }
    Ok(items)
}

pub fn render_prompt(template: &str, item: &BenchItem) -> String {
    let choices = item
        .choices
        .iter()
        .map(|c| format!("{}. {}", c.label, c.text))
        .collect::<Vec<_>>()
        .join("\n");
    template
        .replace("{question}", &item.question)
        .replace("{choices}", &choices)
}

struct LabelPatterns {
    answer_colon: Regex,
    answer_is: Regex,
    leading: Regex,
    own_line: Regex,
}

fn label_patterns() -> &'static LabelPatterns {
    static PATTERNS: OnceLock<LabelPatterns> = OnceLock::new();
    PATTERNS.get_or_init(|| LabelPatterns {
        answer_colon: Regex::new(r"(?i)\banswer\s*:\s*\(?([a-e])\)?(?:[^a-z0-9]|$)").unwrap(),
        answer_is: Regex::new(r"(?i)\banswer\s+is\s*:?\s*(?:\(([a-e])\)|([a-e])(?:[.):]|\s*$))")
            .unwrap(),
        leading: Regex::new(r"(?i)^\s*(?:\(([a-e])\)|([a-e])(?:[.):]|\s*$))").unwrap(),
        own_line: Regex::new(r"(?im)^[ \t]*\(?([a-e])[.)]?[ \t]*$").unwrap(),
    })
}

/// `needle` occurs in `hay` with no alphanumeric character on either side.
fn contains_phrase(hay: &str, needle: &str) -> bool {
    hay.match_indices(needle).any(|(i, m)| {
        let before = hay[..i].chars().next_back();
        let after = hay[i + m.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Picks the answer label out of a free-text reply.
///
/// Label patterns win first ("Answer: B", "the answer is (C)", a leading
/// "A." / "A)" / "(A)", or a label alone on a line). Failing that, a reply
/// containing exactly one choice text (case-insensitive) selects it.
/// Otherwise the reply is unparseable.
pub fn extract_choice(response: &str, choices: &[Choice]) -> Option<String> {
    let known = |label: &str| -> Option<String> {
        let label = label.to_uppercase();
        choices.iter().any(|c| c.label == label).then_some(label)
    };
    let p = label_patterns();
    for re in [&p.answer_colon, &p.answer_is, &p.leading, &p.own_line] {
        for caps in re.captures_iter(response) {
            let label = caps.iter().skip(1).flatten().next().map(|m| m.as_str());
            if let Some(found) = label.and_then(known) {
                return Some(found);
            }
        }
    }

    let lower = response.to_lowercase();
    let mut hits = choices.iter().filter(|c| {
        let t = c.text.trim().to_lowercase();
        !t.is_empty() && contains_phrase(&lower, &t)
    });
    match (hits.next(), hits.next()) {
        (Some(only), None) => Some(only.label.clone()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: String,
    pub extracted: Option<String>,
    pub correct: bool,
    /// Raw reply; `None` when the endpoint failed after retries.
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub model: String,
    pub template: String,
    pub total: usize,
    pub correct: usize,
    pub unparseable: usize,
    pub accuracy: f64,
    pub per_item: Vec<ItemOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub template: String,
    pub params: GenerationParams,
    pub retry: RetryPolicy,
    pub parallelism: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            template: DEFAULT_TEMPLATE.into(),
            params: GenerationParams {
                temperature: Some(0.0),
                max_tokens: Some(32),
                seed: None,
            },
            retry: RetryPolicy::default(),
            parallelism: 1,
        }
    }
}

/// Prompts every item and scores the extracted labels. Unparseable replies
/// and endpoint failures count as incorrect. `per_item` follows item order.
pub fn run_benchmark(
    completer: &dyn Completer,
    model: &str,
    items: &[BenchItem],
    config: &BenchConfig,
) -> Result<BenchResult> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("benchmark has no items".into()));
    }
    let mut slots: Vec<Option<ItemOutcome>> = vec![None; items.len()];
    run_bounded(
        items.iter().enumerate().collect(),
        config.parallelism,
        |(idx, item)| {
            let prompt = render_prompt(&config.template, item);
            let (reply, _) =
                complete_with_retry(completer, model, &prompt, &config.params, config.retry);
            let reply = reply
                .map_err(|e| log::warn!("item {}: {e}", item.item_id))
                .ok();
            let extracted = reply
                .as_deref()
                .and_then(|r| extract_choice(r, &item.choices));
            let correct = extracted.as_deref() == Some(item.answer_label.as_str());
            (
                idx,
                ItemOutcome {
                    item_id: item.item_id.clone(),
                    extracted,
                    correct,
                    response: reply,
                },
            )
        },
        |(idx, outcome)| {
            slots[idx] = Some(outcome);
            Ok(())
        },
    )?;
    let per_item: Vec<ItemOutcome> = slots
        .into_iter()
        .map(|o| o.expect("every item scored"))
        .collect();
    let correct = per_item.iter().filter(|o| o.correct).count();
    let unparseable = per_item.iter().filter(|o| o.extracted.is_none()).count();
    Ok(BenchResult {
        model: model.to_string(),
        template: config.template.clone(),
        total: per_item.len(),
        correct,
        unparseable,
        accuracy: correct as f64 / per_item.len() as f64,
        per_item,
    })
}
