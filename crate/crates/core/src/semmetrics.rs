//! Readability, lexicon-based sentiment and prompt/response similarity.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::http;
use crate::textseg::{self, Token};

pub fn fk_grade(text: &str) -> Result<f64> {
    let tokens = textseg::tokenize_words(text);
    if tokens.is_empty() {
        return Err(Error::undefined("fk_grade", "no words"));
    }
    let sentences = textseg::split_sentences(text).len();
    let mut syllables = 0usize;
    for t in &tokens {
        syllables += textseg::count_syllables(&t.surface)?;
    }
    let words = tokens.len() as f64;
    Ok(0.39 * (words / sentences as f64) + 11.8 * (syllables as f64 / words) - 15.59)
}

pub const BOOSTER_INCREMENT: f64 = 0.293;
pub const CAPS_INCREMENT: f64 = 0.733;
pub const NEGATION_SCALAR: f64 = -0.74;
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 3;
pub const NORMALIZATION_ALPHA: f64 = 15.0;
const BOOSTER_DISTANCE_SCALE: [f64; 3] = [1.0, 0.95, 0.9];

const BUILTIN_LEXICON: &str = include_str!("../data/vader_lexicon.txt");

const BOOSTERS_UP: &[&str] = &[
    "absolutely",
    "amazingly",
    "awfully",
    "completely",
    "considerable",
    "considerably",
    "decidedly",
    "deeply",
    "enormous",
    "enormously",
    "entirely",
    "especially",
    "exceptional",
    "exceptionally",
    "extreme",
    "extremely",
    "fabulously",
    "fully",
    "greatly",
    "highly",
    "hugely",
    "incredible",
    "incredibly",
    "intensely",
    "major",
    "majorly",
    "more",
    "most",
    "particularly",
    "purely",
    "quite",
    "really",
    "remarkably",
    "so",
    "substantially",
    "thoroughly",
    "total",
    "totally",
    "tremendous",
    "tremendously",
    "unbelievably",
    "unusually",
    "utter",
    "utterly",
    "very",
];

const BOOSTERS_DOWN: &[&str] = &[
    "almost",
    "barely",
    "hardly",
    "kinda",
    "kindof",
    "kind-of",
    "less",
    "little",
    "marginal",
    "marginally",
    "occasional",
    "occasionally",
    "partly",
    "scarce",
    "scarcely",
    "slight",
    "slightly",
    "somewhat",
    "sorta",
    "sortof",
    "sort-of",
];

const NEGATORS: &[&str] = &[
    "aint",
    "arent",
    "cannot",
    "cant",
    "couldnt",
    "darent",
    "didnt",
    "doesnt",
    "ain't",
    "aren't",
    "can't",
    "couldn't",
    "daren't",
    "didn't",
    "doesn't",
    "dont",
    "hadnt",
    "hasnt",
    "havent",
    "isnt",
    "mightnt",
    "mustnt",
    "neither",
    "don't",
    "hadn't",
    "hasn't",
    "haven't",
    "isn't",
    "mightn't",
    "mustn't",
    "neednt",
    "needn't",
    "never",
    "none",
    "nope",
    "nor",
    "not",
    "nothing",
    "nowhere",
    "oughtnt",
    "shant",
    "shouldnt",
    "uhuh",
    "wasnt",
    "werent",
    "oughtn't",
    "shan't",
    "shouldn't",
    "uh-uh",
    "wasn't",
    "weren't",
    "without",
    "wont",
    "wouldnt",
    "won't",
    "wouldn't",
    "rarely",
    "seldom",
    "despite",
];

/// Valence lexicon plus the booster and negator word lists.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    pub entries: HashMap<String, f64>,
    pub boosters: HashMap<String, f64>,
    pub negators: HashSet<String>,
}

impl SentimentLexicon {
    /// Parses `token<TAB>valence` lines. Extra tab-separated columns are
    /// ignored, `#` starts a comment line. Default boosters and negators are
    /// attached.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default().trim();
            let valence = cols
                .next()
                .map(str::trim)
                .ok_or_else(|| Error::MalformedLine {
                    line: idx + 1,
                    reason: "expected token<TAB>valence".into(),
                })?;
            let valence: f64 = valence.parse().map_err(|_| Error::MalformedLine {
                line: idx + 1,
                reason: format!("valence `{valence}` is not a number"),
            })?;
            if token.is_empty() || !valence.is_finite() {
                return Err(Error::MalformedLine {
                    line: idx + 1,
                    reason: "empty token or non-finite valence".into(),
                });
            }
            entries.insert(token.to_lowercase(), valence);
        }
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "sentiment lexicon has no entries".into(),
            ));
        }
        let boosters = BOOSTERS_UP
            .iter()
            .map(|w| (w.to_string(), BOOSTER_INCREMENT))
            .chain(
                BOOSTERS_DOWN
                    .iter()
                    .map(|w| (w.to_string(), -BOOSTER_INCREMENT)),
            )
            .collect();
        let negators = NEGATORS.iter().map(|w| w.to_string()).collect();
        Ok(SentimentLexicon {
            entries,
            boosters,
            negators,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The bundled VADER lexicon (MIT licensed, see `data/VADER_LICENSE.txt`).
    pub fn builtin() -> &'static SentimentLexicon {
        static LEXICON: OnceLock<SentimentLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Self::parse(BUILTIN_LEXICON).expect("bundled lexicon parses"))
    }

    fn is_negator(&self, key: &str) -> bool {
        self.negators.contains(key) || key.ends_with("n't")
    }
}

fn is_all_caps(surface: &str) -> bool {
    let mut cased = false;
    for c in surface.chars() {
        if c.is_lowercase() {
            return false;
        }
        cased |= c.is_uppercase();
    }
    cased
}

/// `s / sqrt(s^2 + alpha)`.
pub fn normalize_compound(sum: f64, alpha: f64) -> f64 {
    (sum / (sum * sum + alpha).sqrt()).clamp(-1.0, 1.0)
}

/// Summed valence before normalization.
pub fn sentiment_sum(text: &str, lexicon: &SentimentLexicon) -> f64 {
    let tokens: Vec<Token> = textseg::tokenize_words(text);
    let caps = tokens.iter().filter(|t| is_all_caps(&t.surface)).count();
    let cap_diff = caps > 0 && caps < tokens.len();

    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let key = tok.lowercase_key.as_str();
        if lexicon.boosters.contains_key(key) {
            continue;
        }
        let Some(&base) = lexicon.entries.get(key) else {
            continue;
        };
        let mut valence = base;
        if cap_diff && is_all_caps(&tok.surface) {
            valence += CAPS_INCREMENT.copysign(valence);
        }

        let mut negated = false;
        for (d, scale) in BOOSTER_DISTANCE_SCALE.iter().enumerate() {
            let Some(prev) = i.checked_sub(d + 1).map(|j| &tokens[j]) else {
                break;
            };
            let prev_key = prev.lowercase_key.as_str();
            negated |= lexicon.is_negator(prev_key);
            if lexicon.entries.contains_key(prev_key) {
                continue;
            }
            if let Some(&incr) = lexicon.boosters.get(prev_key) {
                let mut s = if valence < 0.0 { -incr } else { incr };
                if cap_diff && is_all_caps(&prev.surface) {
                    s += if valence > 0.0 {
                        CAPS_INCREMENT
                    } else {
                        -CAPS_INCREMENT
                    };
                }
                valence += s * scale;
            }
        }
        if negated {
            valence *= NEGATION_SCALAR;
        }
        sum += valence;
    }

    let bangs = text
        .chars()
        .filter(|&c| c == '!')
        .count()
        .min(MAX_EXCLAMATIONS);
    let emphasis = bangs as f64 * EXCLAMATION_INCREMENT;
    if sum > 0.0 {
        sum += emphasis;
    } else if sum < 0.0 {
        sum -= emphasis;
    }
    sum
}

/// Rule-based compound sentiment in `(-1, 1)`; 0.0 when no lexicon word occurs.
pub fn sentiment_compound(text: &str, lexicon: &SentimentLexicon) -> f64 {
    normalize_compound(sentiment_sum(text, lexicon), NORMALIZATION_ALPHA)
}

/// A source of fixed-dimension text embeddings.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut out = self.embed_batch(&[text])?;
        out.pop().ok_or_else(|| Error::Provider {
            endpoint: self.name().to_string(),
            reason: "empty reply".into(),
        })
    }
}

pub const DEFAULT_EMBEDDING_DIM: usize = 512;
/// FNV-1a offset basis, used as the default hash seed.
pub const DEFAULT_HASH_SEED: u64 = 0xcbf2_9ce4_8422_2325;
const HASH_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Offline hashed term-frequency embedding.
///
/// Each case-folded token is hashed with 64-bit FNV-1a (state starts at the
/// seed; per byte `h = (h ^ b) * 0x100000001b3` wrapping), and the token adds
/// 1 to bucket `h % dimension`. The vector is L2-normalized; text without
/// tokens embeds to the zero vector.
#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    dimension: usize,
    seed: u64,
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder {
            dimension: DEFAULT_EMBEDDING_DIM,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl HashedEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(HashedEmbedder { dimension, seed })
    }

    pub fn bucket(&self, key: &str) -> usize {
        let mut h = self.seed;
        for b in key.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(HASH_PRIME);
        }
        (h % self.dimension as u64) as usize
    }

    fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for t in textseg::tokenize_words(text) {
            v[self.bucket(&t.lowercase_key)] += 1.0;
        }
        let norm = l2_norm(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn name(&self) -> &str {
        "builtin"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Counting semaphore bounding in-flight HTTP calls.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
            while *free == 0 {
                free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.cv.notify_one();
        out
    }
}

/// Remote embedder: POST `{"input": [texts]}` → `{"vectors": [[floats]]}`.
#[derive(Debug)]
pub struct HttpEmbedder {
    endpoint: String,
    dimension: usize,
    agent: ureq::Agent,
    gate: Gate,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, dimension: usize, max_in_flight: usize) -> Self {
        HttpEmbedder {
            endpoint: endpoint.into(),
            dimension,
            agent: http::agent(Duration::from_secs(60)),
            gate: Gate {
                free: Mutex::new(max_in_flight.max(1)),
                cv: Condvar::new(),
            },
        }
    }

    fn provider_error(&self, reason: impl Into<String>) -> Error {
        Error::Provider {
            endpoint: self.endpoint.clone(),
            reason: reason.into(),
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        &self.endpoint
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let body = json!({ "input": texts });
        let reply = self
            .gate
            .run(|| http::post_json(&self.agent, &self.endpoint, &body))
            .map_err(|e| self.provider_error(e))?;
        let vectors = reply
            .get("vectors")
            .and_then(Value::as_array)
            .ok_or_else(|| self.provider_error("reply has no `vectors` array"))?;
        if vectors.len() != texts.len() {
            return Err(self.provider_error(format!(
                "expected {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        vectors
            .iter()
            .map(|v| {
                let v: Vec<f64> = serde_json::from_value(v.clone())
                    .map_err(|e| self.provider_error(format!("bad vector: {e}")))?;
                if v.len() != self.dimension {
                    return Err(self.provider_error(format!(
                        "dimension mismatch: expected {}, got {}",
                        self.dimension,
                        v.len()
                    )));
                }
                Ok(v)
            })
            .collect()
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0.0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

pub fn semantic_similarity(
    prompt: &str,
    response: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64> {
    let vs = provider.embed_batch(&[prompt, response])?;
    Ok(cosine(&vs[0], &vs[1]))
}
