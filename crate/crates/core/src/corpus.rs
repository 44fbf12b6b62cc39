//! Response records, JSONL ingestion, quality filtering and segmentation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::textseg;

/// One generated sample: which system produced it and for which prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub model: String,
    pub prompt_id: String,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, Value>,
}

impl ResponseRecord {
    pub fn new(
        model: impl Into<String>,
        prompt_id: impl Into<String>,
        prompt: impl Into<String>,
        response: impl Into<String>,
    ) -> Self {
        ResponseRecord {
            model: model.into(),
            prompt_id: prompt_id.into(),
            prompt: prompt.into(),
            response: response.into(),
            meta: BTreeMap::new(),
        }
    }

    /// Parses one JSONL object. Unknown top-level keys are folded into `meta`.
    pub fn from_json_line(line: &str) -> std::result::Result<Self, String> {
        let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let Value::Object(mut obj) = value else {
            return Err("expected a JSON object".into());
        };
        let mut take = |key: &str| -> std::result::Result<String, String> {
            match obj.remove(key) {
                Some(Value::String(s)) => Ok(s),
                Some(_) => Err(format!("field `{key}` must be a string")),
                None => Err(format!("missing field `{key}`")),
            }
        };
        let model = take("model")?;
        let prompt_id = take("prompt_id")?;
        let prompt = take("prompt")?;
        let response = take("response")?;
        if model.trim().is_empty() {
            return Err("field `model` is empty".into());
        }
        if prompt_id.trim().is_empty() {
            return Err("field `prompt_id` is empty".into());
        }

        let mut meta = BTreeMap::new();
        match obj.remove("meta") {
            Some(Value::Object(m)) => meta.extend(m),
            Some(Value::Null) | None => {}
            Some(_) => return Err("field `meta` must be an object".into()),
        }
        meta.extend(obj);
        Ok(ResponseRecord {
            model,
            prompt_id,
            prompt,
            response,
            meta,
        })
    }

    pub fn to_json_line(&self) -> String {
        let mut obj = Map::new();
        obj.insert("model".into(), Value::String(self.model.clone()));
        obj.insert("prompt_id".into(), Value::String(self.prompt_id.clone()));
        obj.insert("prompt".into(), Value::String(self.prompt.clone()));
        obj.insert("response".into(), Value::String(self.response.clone()));
        if !self.meta.is_empty() {
            let meta: Map<String, Value> = self.meta.clone().into_iter().collect();
            obj.insert("meta".into(), Value::Object(meta));
        }
        Value::Object(obj).to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<ResponseRecord>,
    pub source: String,
}

impl Corpus {
    pub fn new(records: Vec<ResponseRecord>, source: impl Into<String>) -> Self {
        Corpus {
            records,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records grouped by model id, models in lexicographic order, records in
    /// corpus order.
    pub fn by_model(&self) -> BTreeMap<&str, Vec<&ResponseRecord>> {
        let mut groups: BTreeMap<&str, Vec<&ResponseRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry(r.model.as_str()).or_default().push(r);
        }
        groups
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for r in &self.records {
            writeln!(w, "{}", r.to_json_line()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// First malformed line aborts the load.
    #[default]
    Strict,
    /// Malformed lines are skipped and reported.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedLine>,
}

/// Reads a JSONL corpus. Blank lines are ignored; line numbers are 1-based.
pub fn load_jsonl(path: impl AsRef<Path>, mode: LoadMode) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut skipped = Vec::new();

    for (idx, raw) in reader.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.map_err(|e| Error::io(path, e))?;
        let parsed = match std::str::from_utf8(&raw) {
            Ok(line) if line.trim().is_empty() => continue,
            Ok(line) => ResponseRecord::from_json_line(line.trim_end_matches('\r')),
            Err(e) => Err(format!("invalid UTF-8: {e}")),
        };
        match parsed {
            Ok(r) => records.push(r),
            Err(reason) => match mode {
                LoadMode::Strict => {
                    return Err(Error::MalformedLine {
                        line: line_no,
                        reason,
                    })
                }
                LoadMode::Lenient => {
                    log::warn!("{}:{line_no}: skipped: {reason}", path.display());
                    skipped.push(SkippedLine {
                        line: line_no,
                        reason,
                    });
                }
            },
        }
    }
    Ok(Loaded {
        corpus: Corpus::new(records, path.display().to_string()),
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_tokens: usize,
    pub max_tokens: Option<usize>,
    pub drop_exact_duplicates: bool,
    pub per_model_cap: Option<usize>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_tokens: 10,
            max_tokens: None,
            drop_exact_duplicates: true,
            per_model_cap: None,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        match self.max_tokens {
            Some(max) if max < self.min_tokens => Err(Error::InvalidArgument(format!(
                "max_tokens ({max}) is below min_tokens ({})",
                self.min_tokens
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped_short: usize,
    pub dropped_long: usize,
    pub dropped_duplicate: usize,
    pub dropped_capped: usize,
}

impl FilterReport {
    pub fn total(&self) -> usize {
        self.kept
            + self.dropped_short
            + self.dropped_long
            + self.dropped_duplicate
            + self.dropped_capped
    }
}

fn duplicate_key(response: &str) -> String {
    response.nfc().collect::<String>().trim_end().to_string()
}

/// Applies `policy` in record order. Checks run length, then duplicate, then
/// cap, and the first failing check decides the drop reason. Duplicates are
/// judged within a model after NFC normalization and trailing-whitespace
/// removal; the cap keeps each model's earliest surviving records.
pub fn filter_corpus(corpus: &Corpus, policy: &FilterPolicy) -> (Corpus, FilterReport) {
    let mut report = FilterReport::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut per_model: HashMap<String, usize> = HashMap::new();
    let mut kept = Vec::new();

    for r in &corpus.records {
        let n = textseg::word_count(&r.response);
        if n < policy.min_tokens {
            report.dropped_short += 1;
            continue;
        }
        if policy.max_tokens.is_some_and(|max| n > max) {
            report.dropped_long += 1;
            continue;
        }
        if policy.drop_exact_duplicates
            && !seen.insert((r.model.clone(), duplicate_key(&r.response)))
        {
            report.dropped_duplicate += 1;
            continue;
        }
        let count = per_model.entry(r.model.clone()).or_insert(0);
        if policy.per_model_cap.is_some_and(|cap| *count >= cap) {
            report.dropped_capped += 1;
            continue;
        }
        *count += 1;
        kept.push(r.clone());
    }
    report.kept = kept.len();
    (Corpus::new(kept, corpus.source.clone()), report)
}

/// Splits `text` into consecutive segments of `n_words` words (the last may be
/// shorter). Segment words are joined with single spaces.
pub fn segment_text(text: &str, n_words: usize) -> Result<Vec<String>> {
    if n_words == 0 {
        return Err(Error::InvalidArgument("n_words must be at least 1".into()));
    }
    let tokens = textseg::tokenize_words(text);
    Ok(tokens
        .chunks(n_words)
        .map(|chunk| {
            chunk
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect())
}
