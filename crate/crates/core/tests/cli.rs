mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{bench_items, oracle_server, rich_corpus, zipf_corpus};
use lexprofile::corpus::Corpus;
use lexprofile::report::{ProfileDocument, ReportDocument};

fn lexprofile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexprofile"))
        .args(args)
        .output()
        .expect("run lexprofile")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_corpus(dir: &Path) -> std::path::PathBuf {
    let mut records = rich_corpus("alpha", 15, 11);
    records.extend(zipf_corpus("beta", 15, 12));
    let path = dir.join("raw.jsonl");
    Corpus::new(records, "test").write_jsonl(&path).unwrap();
    path
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = write_corpus(d);
    let clean = d.join("clean.jsonl");
    let profiles = d.join("profiles.json");
    let report = d.join("report.json");

    let o = lexprofile(&[
        "ingest",
        "--input",
        s(&raw),
        "--min-tokens",
        "10",
        "--output",
        s(&clean),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kept 30 of 30"));

    let o = lexprofile(&["profile", "--corpus", s(&clean), "--out", s(&profiles)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = ProfileDocument::read(&profiles).unwrap();
    assert_eq!(
        doc.profiles
            .iter()
            .map(|p| p.model.as_str())
            .collect::<Vec<_>>(),
        ["alpha", "beta"]
    );

    let o = lexprofile(&["compare", "--profiles", s(&profiles), "--out", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = ReportDocument::read(&report).unwrap();
    assert_eq!(doc.report.models, ["alpha", "beta"]);

    for format in ["json", "csv", "svg"] {
        let out = d.join(format);
        let o = lexprofile(&[
            "render",
            "--report",
            s(&report),
            "--format",
            format,
            "--out-dir",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(d.join("svg/ridge_plots.svg").exists());
    assert!(d.join("csv/tests.csv").exists());
}

#[test]
fn compare_merges_several_profile_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = d.join("a.jsonl");
    let b = d.join("b.jsonl");
    Corpus::new(rich_corpus("alpha", 8, 1), "a")
        .write_jsonl(&a)
        .unwrap();
    Corpus::new(zipf_corpus("beta", 8, 2), "b")
        .write_jsonl(&b)
        .unwrap();
    for (corpus, out) in [(&a, "pa.json"), (&b, "pb.json")] {
        assert!(
            lexprofile(&["profile", "--corpus", s(corpus), "--out", s(&d.join(out))])
                .status
                .success()
        );
    }
    let o = lexprofile(&[
        "compare",
        "--profiles",
        s(&d.join("pa.json")),
        s(&d.join("pb.json")),
        "--out",
        s(&d.join("r.json")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    assert_eq!(lexprofile(&["profile"]).status.code(), Some(1));
    assert_eq!(lexprofile(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lexprofile(&["--help"]).status.code(), Some(0));

    let missing = d.join("nope.jsonl");
    let o = lexprofile(&[
        "profile",
        "--corpus",
        s(&missing),
        "--out",
        s(&d.join("p.json")),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let bad = d.join("bad.jsonl");
    fs::write(&bad, "{\"model\":\"m\"}\n").unwrap();
    let o = lexprofile(&[
        "ingest",
        "--input",
        s(&bad),
        "--output",
        s(&d.join("o.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = lexprofile(&[
        "ingest",
        "--input",
        s(&bad),
        "--lenient",
        "--output",
        s(&d.join("o.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(0));

    let raw = write_corpus(d);
    let o = lexprofile(&[
        "profile",
        "--corpus",
        s(&raw),
        "--embedder",
        "magic",
        "--out",
        s(&d.join("p.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_command_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let items = bench_items();
    let path = dir.path().join("items.jsonl");
    let lines: Vec<String> = items
        .iter()
        .map(|i| serde_json::to_string(i).unwrap())
        .collect();
    fs::write(&path, lines.join("\n")).unwrap();
    let server = oracle_server(&items);
    let out = dir.path().join("bench.json");
    let o = lexprofile(&[
        "bench",
        "--endpoint",
        &server.url,
        "--model",
        "oracle",
        "--items",
        s(&path),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result["accuracy"], 1.0);
    assert_eq!(result["total"], 10);
}
