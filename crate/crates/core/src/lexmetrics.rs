//! Lexical and syntactic metrics: type/token ratios, entropy, Yule's K,
//! hapax ratio and mean sentence length.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::ResponseRecord;
use crate::error::{Error, Result};
use crate::textseg::{self, Token};

/// Token frequency-of-frequencies table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencySpectrum {
    /// Total token count.
    pub n: usize,
    pub type_counts: BTreeMap<String, usize>,
    /// `i -> V_i`, the number of types occurring exactly `i` times.
    pub spectrum: BTreeMap<usize, usize>,
}

impl FrequencySpectrum {
    pub fn types(&self) -> usize {
        self.type_counts.len()
    }

    pub fn hapaxes(&self) -> usize {
        self.spectrum.get(&1).copied().unwrap_or(0)
    }

    /// Merges counts from several token lists into one pooled spectrum.
    pub fn pooled<'a>(lists: impl IntoIterator<Item = &'a [Token]>) -> Self {
        let mut type_counts: BTreeMap<String, usize> = BTreeMap::new();
        for tokens in lists {
            for t in tokens {
                *type_counts.entry(t.lowercase_key.clone()).or_insert(0) += 1;
            }
        }
        Self::from_type_counts(type_counts)
    }

    fn from_type_counts(type_counts: BTreeMap<String, usize>) -> Self {
        let mut spectrum = BTreeMap::new();
        let mut n = 0;
        for &c in type_counts.values() {
            n += c;
            *spectrum.entry(c).or_insert(0) += 1;
        }
        FrequencySpectrum {
            n,
            type_counts,
            spectrum,
        }
    }
}

pub fn frequency_spectrum(tokens: &[Token]) -> FrequencySpectrum {
    FrequencySpectrum::pooled([tokens])
}

fn require_tokens(tokens: &[Token], metric: &'static str) -> Result<()> {
    if tokens.is_empty() {
        Err(Error::undefined(metric, "no tokens"))
    } else {
        Ok(())
    }
}

pub fn unique_word_ratio(tokens: &[Token]) -> Result<f64> {
    require_tokens(tokens, "unique_word_ratio")?;
    let types: HashSet<&str> = tokens.iter().map(|t| t.lowercase_key.as_str()).collect();
    Ok(types.len() as f64 / tokens.len() as f64)
}

pub fn avg_word_length(tokens: &[Token]) -> Result<f64> {
    require_tokens(tokens, "avg_word_length")?;
    let chars: usize = tokens.iter().map(|t| t.char_length).sum();
    Ok(chars as f64 / tokens.len() as f64)
}

/// Shannon entropy of the within-response type distribution, in bits.
pub fn token_diversity(tokens: &[Token]) -> Result<f64> {
    shannon_entropy(tokens, 2.0)
}

pub fn shannon_entropy(tokens: &[Token], base: f64) -> Result<f64> {
    require_tokens(tokens, "token_diversity")?;
    let spec = frequency_spectrum(tokens);
    let n = spec.n as f64;
    let h: f64 = spec
        .type_counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log(base)
        })
        .sum();
    // -0.0 for a single type
    Ok(h.max(0.0))
}

pub fn sentence_complexity(text: &str) -> Result<f64> {
    let sentences = textseg::split_sentences(text);
    if sentences.is_empty() {
        return Err(Error::undefined("sentence_complexity", "no words"));
    }
    let words: usize = sentences.iter().map(|s| s.word_count).sum();
    Ok(words as f64 / sentences.len() as f64)
}

/// `K = 10^4 * (sum_i i^2 V_i - N) / N^2`.
pub fn yules_k(spectrum: &FrequencySpectrum) -> Result<f64> {
    if spectrum.n < 2 {
        return Err(Error::undefined("yules_k", "fewer than 2 tokens"));
    }
    let n = spectrum.n as f64;
    let m2: f64 = spectrum
        .spectrum
        .iter()
        .map(|(&i, &v)| (i * i * v) as f64)
        .sum();
    Ok(1e4 * (m2 - n) / (n * n))
}

/// Denominator used by [`hapax_ratio_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapaxBase {
    #[default]
    Types,
    Tokens,
}

/// Hapax legomena over distinct types.
pub fn hapax_ratio(spectrum: &FrequencySpectrum) -> Result<f64> {
    hapax_ratio_with(spectrum, HapaxBase::Types)
}

pub fn hapax_ratio_with(spectrum: &FrequencySpectrum, base: HapaxBase) -> Result<f64> {
    if spectrum.types() == 0 {
        return Err(Error::undefined("hapax_ratio", "empty spectrum"));
    }
    let denom = match base {
        HapaxBase::Types => spectrum.types(),
        HapaxBase::Tokens => spectrum.n,
    };
    Ok(spectrum.hapaxes() as f64 / denom as f64)
}

/// Distinct case-folded word types across every response in the group.
pub fn vocabulary_size<'a>(responses: impl IntoIterator<Item = &'a ResponseRecord>) -> usize {
    let mut types = HashSet::new();
    for r in responses {
        for t in textseg::tokenize_words(&r.response) {
            types.insert(t.lowercase_key);
        }
    }
    types.len()
}

/// Per-response metrics, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    UniqueWordRatio,
    AvgWordLength,
    TokenDiversity,
    SentenceComplexity,
    YulesK,
    HapaxRatio,
    FkGrade,
    Sentiment,
    SemanticSimilarity,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::UniqueWordRatio,
        Metric::AvgWordLength,
        Metric::TokenDiversity,
        Metric::SentenceComplexity,
        Metric::YulesK,
        Metric::HapaxRatio,
        Metric::FkGrade,
        Metric::Sentiment,
        Metric::SemanticSimilarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::UniqueWordRatio => "unique_word_ratio",
            Metric::AvgWordLength => "avg_word_length",
            Metric::TokenDiversity => "token_diversity",
            Metric::SentenceComplexity => "sentence_complexity",
            Metric::YulesK => "yules_k",
            Metric::HapaxRatio => "hapax_ratio",
            Metric::FkGrade => "fk_grade",
            Metric::Sentiment => "sentiment",
            Metric::SemanticSimilarity => "semantic_similarity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

/// Every metric for one response. `None` marks a metric undefined on this
/// response (for example Yule's K on a one-token reply).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub token_count: usize,
    pub unique_word_ratio: Option<f64>,
    pub avg_word_length: Option<f64>,
    pub token_diversity: Option<f64>,
    pub sentence_complexity: Option<f64>,
    pub yules_k: Option<f64>,
    pub hapax_ratio: Option<f64>,
    pub fk_grade: Option<f64>,
    pub sentiment: Option<f64>,
    pub semantic_similarity: Option<f64>,
}

impl MetricVector {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::UniqueWordRatio => self.unique_word_ratio,
            Metric::AvgWordLength => self.avg_word_length,
            Metric::TokenDiversity => self.token_diversity,
            Metric::SentenceComplexity => self.sentence_complexity,
            Metric::YulesK => self.yules_k,
            Metric::HapaxRatio => self.hapax_ratio,
            Metric::FkGrade => self.fk_grade,
            Metric::Sentiment => self.sentiment,
            Metric::SemanticSimilarity => self.semantic_similarity,
        }
    }

    pub fn set(&mut self, metric: Metric, value: Option<f64>) {
        let slot = match metric {
            Metric::UniqueWordRatio => &mut self.unique_word_ratio,
            Metric::AvgWordLength => &mut self.avg_word_length,
            Metric::TokenDiversity => &mut self.token_diversity,
            Metric::SentenceComplexity => &mut self.sentence_complexity,
            Metric::YulesK => &mut self.yules_k,
            Metric::HapaxRatio => &mut self.hapax_ratio,
            Metric::FkGrade => &mut self.fk_grade,
            Metric::Sentiment => &mut self.sentiment,
            Metric::SemanticSimilarity => &mut self.semantic_similarity,
        };
        *slot = value;
    }

    /// The lexical half of the vector; semantic fields are left `None`.
    pub fn lexical(text: &str, tokens: &[Token]) -> Self {
        let spec = frequency_spectrum(tokens);
        MetricVector {
            token_count: tokens.len(),
            unique_word_ratio: unique_word_ratio(tokens).ok(),
            avg_word_length: avg_word_length(tokens).ok(),
            token_diversity: token_diversity(tokens).ok(),
            sentence_complexity: sentence_complexity(text).ok(),
            yules_k: yules_k(&spec).ok(),
            hapax_ratio: hapax_ratio(&spec).ok(),
            ..MetricVector::default()
        }
    }
}
