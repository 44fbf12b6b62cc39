//! Word tokenization, sentence segmentation and syllable counting.
//!
//! Every metric in the crate goes through these three functions, so "word" and
//! "sentence" have exactly one definition.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

/// One word occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Unicode scalar values in `surface`.
    pub char_length: usize,
    /// Case-folded surface; two tokens are the same type iff their keys match.
    pub lowercase_key: String,
}

impl Token {
    pub fn new(surface: &str) -> Self {
        Token {
            surface: surface.to_string(),
            char_length: surface.chars().count(),
            lowercase_key: surface.to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub word_count: usize,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Byte ranges of word tokens in `text`.
///
/// A token is a maximal run of alphanumerics, where a single apostrophe or
/// ASCII hyphen between two alphanumerics stays inside the token.
fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
            } else if is_joiner(c) && j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        spans.push((start, end));
        i = j;
    }
    spans
}

pub fn tokenize_words(text: &str) -> Vec<Token> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| Token::new(&text[s..e]))
        .collect()
}

/// Number of word tokens in `text`, without allocating tokens.
pub fn word_count(text: &str) -> usize {
    token_spans(text).len()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201D}' | '\u{2019}' | ')' | ']' | '»')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201C}' | '\u{2018}' | '(' | '[' | '«')
}

/// Heuristic sentence splitter with an abbreviation list.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Parses one abbreviation per line; blank lines and `#` comments are ignored.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        SentenceSplitter { abbreviations }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let list = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&list))
    }

    pub fn is_abbreviation(&self, chunk: &str) -> bool {
        self.abbreviations.contains(&chunk.to_lowercase())
    }

    pub fn split(&self, text: &str) -> Vec<Sentence> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let byte_at = |k: usize| chars.get(k).map_or(text.len(), |&(b, _)| b);
        let mut sentences = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;

        while i < chars.len() {
            if !is_terminator(chars[i].1) {
                i += 1;
                continue;
            }
            let term_start = i;
            let mut j = i;
            while j < chars.len() && is_terminator(chars[j].1) {
                j += 1;
            }
            let single_period = j - term_start == 1 && chars[term_start].1 == '.';
            while j < chars.len() && is_closer(chars[j].1) {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = if k == chars.len() {
                true
            } else if k == j {
                false
            } else {
                let mut m = k;
                while m < chars.len() && is_opener(chars[m].1) {
                    m += 1;
                }
                m < chars.len() && chars[m].1.is_uppercase()
            };
            let boundary = boundary
                && !(single_period
                    && self.preceded_by_abbreviation(text, start, byte_at(term_start + 1)));

            if boundary {
                let end = byte_at(j);
                push_sentence(&mut sentences, &text[start..end]);
                start = end;
            }
            i = j.max(i + 1);
        }
        if start < text.len() {
            push_sentence(&mut sentences, &text[start..]);
        }
        sentences
    }

    /// Whether the whitespace-delimited chunk ending at byte `end` (which
    /// includes the period) is a listed abbreviation.
    fn preceded_by_abbreviation(&self, text: &str, floor: usize, end: usize) -> bool {
        let head = &text[floor..end];
        let chunk_start = head
            .char_indices()
            .rev()
            .find(|&(_, c)| c.is_whitespace())
            .map_or(0, |(b, c)| b + c.len_utf8());
        let chunk = head[chunk_start..].trim_start_matches(is_opener);
        self.is_abbreviation(chunk)
    }
}

fn push_sentence(out: &mut Vec<Sentence>, raw: &str) {
    let text = raw.trim();
    let word_count = word_count(text);
    if word_count > 0 {
        out.push(Sentence {
            text: text.to_string(),
            word_count,
        });
    }
}

/// Splits with the default abbreviation list.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    thread_local! {
        static DEFAULT: SentenceSplitter = SentenceSplitter::default();
    }
    DEFAULT.with(|s| s.split(text))
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

fn is_consonant(c: char) -> bool {
    c.is_alphabetic() && !is_vowel(c)
}

/// Heuristic English syllable count.
///
/// Counts runs of `aeiouy`, drops a silent final `e` (kept for a
/// consonant + `le` ending), and adds one for the `-eate`/`-iate` hiatus.
/// Words with no vowels (numerals, acronyms) count one syllable per digit,
/// minimum one.
pub fn count_syllables(word: &str) -> Result<usize> {
    if word.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot count syllables of an empty word".into(),
        ));
    }
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &lower {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    if groups == 0 {
        let digits = lower.iter().filter(|c| c.is_ascii_digit()).count();
        return Ok(digits.max(1));
    }

    let n = lower.len();
    let mut count = groups;
    if count > 1 && n >= 2 && lower[n - 1] == 'e' && is_consonant(lower[n - 2]) {
        let consonant_le = lower[n - 2] == 'l' && n >= 3 && is_consonant(lower[n - 3]);
        if !consonant_le {
            count -= 1;
        }
    }
    let s: String = lower.iter().collect();
    if ["eate", "iate", "eated", "iated"]
        .iter()
        .any(|suf| s.ends_with(suf))
    {
        count += 1;
    }
    Ok(count.max(1))
}
