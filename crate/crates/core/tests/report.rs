mod common;

use std::fs;

use common::{rich_corpus, zipf_corpus};
use lexprofile::lexmetrics::Metric;
use lexprofile::report::{
    self, compare_models, emit_report, profile_corpus, Format, ReportDocument,
};
use lexprofile::semmetrics::{HashedEmbedder, SentimentLexicon};
use lexprofile::stats;

fn profiles() -> Vec<report::ModelProfile> {
    let mut records = rich_corpus("rich", 30, 1);
    records.extend(zipf_corpus("zipf", 30, 2));
    records.extend(zipf_corpus("zipf-b", 20, 3));
    profile_corpus(
        &records,
        &HashedEmbedder::default(),
        SentimentLexicon::builtin(),
    )
    .unwrap()
}

#[test]
fn json_round_trip() {
    let ps = profiles();
    let r = compare_models(&ps).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&r, &ps, Format::Json, dir.path()).unwrap();
    assert_eq!(written, [dir.path().join("report.json")]);
    let back = ReportDocument::read(&written[0]).unwrap();
    assert_eq!(back.schema_version, 1);
    assert_eq!(back.report, r);
    assert_eq!(back.profiles, ps);
}

#[test]
fn svg_is_deterministic_and_well_formed() {
    let ps = profiles();
    let r = compare_models(&ps).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let wa = emit_report(&r, &ps, Format::Svg, a.path()).unwrap();
    let wb = emit_report(&r, &ps, Format::Svg, b.path()).unwrap();
    assert_eq!(wa.len(), 3);
    for (pa, pb) in wa.iter().zip(&wb) {
        let text = fs::read_to_string(pa).unwrap();
        assert_eq!(text, fs::read_to_string(pb).unwrap());
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(!text.contains("NaN"));
    }
    let scatter = fs::read_to_string(a.path().join("scatter_matrix.svg")).unwrap();
    assert_eq!(scatter.matches("r = ").count(), 6);
}

#[test]
fn ridge_falls_back_to_points_on_degenerate_density() {
    let mut ps = profiles();
    for s in &mut ps[0].vectors {
        s.metrics.sentiment = Some(0.0);
    }
    let r = compare_models(&ps).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&r, &ps, Format::Svg, dir.path()).unwrap();
    let ridge = fs::read_to_string(dir.path().join("ridge_plots.svg")).unwrap();
    assert!(ridge.contains("<circle"));
    roxmltree::Document::parse(&ridge).unwrap();
}

#[test]
fn every_ridge_curve_integrates_to_one() {
    let ps = profiles();
    for m in Metric::ALL {
        for (_, curve) in report::ridge_curves(&ps, m) {
            if let Some(c) = curve {
                let area = c.integral();
                assert!((0.999..=1.001).contains(&area), "{m}: {area}");
            }
        }
    }
}

#[test]
fn csv_tables_match_module_operations() {
    let ps = profiles();
    let r = compare_models(&ps).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&r, &ps, Format::Csv, dir.path()).unwrap();

    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().collect();
    assert_eq!(rows.len(), 1 + 80);
    assert!(rows[0].starts_with("model,prompt_id,token_count,unique_word_ratio"));

    let groups: Vec<Vec<f64>> = ps.iter().map(|p| p.values(Metric::YulesK)).collect();
    let kw = stats::kruskal_wallis(&groups).unwrap();
    let tests = fs::read_to_string(dir.path().join("tests.csv")).unwrap();
    let row = tests
        .lines()
        .find(|l| l.starts_with("yules_k,omnibus"))
        .unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[4], format!("{:.6}", kw.statistic));
    assert_eq!(cols[6], format!("{:.6}", kw.p_value));
}

#[test]
fn comparison_invariant_to_profile_order() {
    let ps = profiles();
    let mut rev = ps.clone();
    rev.reverse();
    assert_eq!(compare_models(&ps).unwrap(), compare_models(&rev).unwrap());
}

#[test]
fn unwritable_out_dir_is_io_error() {
    let ps = profiles();
    let r = compare_models(&ps).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = emit_report(&r, &ps, Format::Json, blocker.join("sub")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}
