//! Scripted HTTP endpoint for harness tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde_json::Value;

pub type Handler = dyn Fn(usize, &Value) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub url: String,
    calls: Arc<AtomicUsize>,
}

impl MockServer {
    /// Serves every POST with `handler(call_index, json_body)`.
    pub fn start(handler: impl Fn(usize, &Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let calls = Arc::new(AtomicUsize::new(0));
        let handler: Arc<Handler> = Arc::new(handler);
        let counter = Arc::clone(&calls);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let handler = Arc::clone(&handler);
                let counter = Arc::clone(&counter);
                thread::spawn(move || serve(stream, handler.as_ref(), &counter));
            }
        });
        MockServer { url, calls }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, handler: &Handler, calls: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            break;
        }
        if let Some((name, value)) = trimmed.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let index = calls.fetch_add(1, Ordering::SeqCst);
    let (status, reply) = handler(index, &request);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
    let _ = stream.flush();
}

pub fn text_reply(text: &str) -> (u16, String) {
    (200, serde_json::json!({ "text": text }).to_string())
}

use lexprofile::genharness::{render_prompt, BenchItem, Choice, CHOICE_LABELS, DEFAULT_TEMPLATE};

/// Ten four-way items whose answers cycle A, B, C, D.
pub fn bench_items() -> Vec<BenchItem> {
    (0..10)
        .map(|i| BenchItem {
            item_id: format!("item-{i}"),
            question: format!("Which option is number {i}?"),
            choices: CHOICE_LABELS[..4]
                .iter()
                .enumerate()
                .map(|(k, l)| Choice {
                    label: l.to_string(),
                    text: format!("option {i}-{k}"),
                })
                .collect(),
            answer_label: CHOICE_LABELS[i % 4].to_string(),
        })
        .collect()
}

/// Answers every rendered item correctly.
pub fn oracle_server(items: &[BenchItem]) -> MockServer {
    let answers: Vec<(String, String)> = items
        .iter()
        .map(|it| (render_prompt(DEFAULT_TEMPLATE, it), it.answer_label.clone()))
        .collect();
    MockServer::start(move |_, req| {
        let prompt = req["prompt"].as_str().unwrap_or_default();
        match answers.iter().find(|(p, _)| p == prompt) {
            Some((_, label)) => text_reply(&format!(" {label}. Final answer: {label}")),
            None => (400, r#"{"error":"unknown prompt"}"#.into()),
        }
    })
}

/// Replies with text that names no label and no choice.
pub fn noise_server() -> MockServer {
    MockServer::start(|i, _| {
        text_reply(&format!(
            "riverrun, past Eve and Adam's, swerve {i} of shore"
        ))
    })
}

pub fn fixed_label_server(label: &'static str) -> MockServer {
    MockServer::start(move |_, _| text_reply(&format!("Answer: {label}")))
}

use lexprofile::corpus::ResponseRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

fn sentences(words: Vec<String>, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut left = 0usize;
    for (i, w) in words.into_iter().enumerate() {
        if left == 0 {
            if i > 0 {
                out.push_str(". ");
            }
            left = rng.random_range(6..14);
            let mut c = w.chars();
            out.extend(c.next().map(|f| f.to_ascii_uppercase()));
            out.push_str(c.as_str());
        } else {
            out.push(' ');
            out.push_str(&w);
        }
        left -= 1;
    }
    out.push('.');
    out
}

fn fresh_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(4..10);
    (0..len)
        .map(|_| rng.random_range(b'a'..=b'z') as char)
        .collect()
}

/// Responses whose words are almost all distinct.
pub fn rich_corpus(model: &str, n: usize, seed: u64) -> Vec<ResponseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(40..80);
            let words = (0..len).map(|_| fresh_word(&mut rng)).collect();
            ResponseRecord::new(
                model,
                format!("p{}", i % 10),
                format!("Prompt number {}", i % 10),
                sentences(words, &mut rng),
            )
        })
        .collect()
}

/// Responses drawn from a small vocabulary with Zipfian repetition.
pub fn zipf_corpus(model: &str, n: usize, seed: u64) -> Vec<ResponseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..30).map(|_| fresh_word(&mut rng)).collect();
    let zipf = Zipf::new(vocab.len() as f64, 1.2).unwrap();
    (0..n)
        .map(|i| {
            let len = rng.random_range(40..80);
            let words = (0..len)
                .map(|_| vocab[zipf.sample(&mut rng) as usize - 1].clone())
                .collect();
            ResponseRecord::new(
                model,
                format!("p{}", i % 10),
                format!("Prompt number {}", i % 10),
                sentences(words, &mut rng),
            )
        })
        .collect()
}
