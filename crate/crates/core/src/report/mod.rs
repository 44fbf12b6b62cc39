//! Per-model profiles, cross-model comparison and report emission.

mod svg;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ResponseRecord;
use crate::error::{Error, Result};
use crate::lexmetrics::{self, FrequencySpectrum, Metric, MetricVector};
use crate::semmetrics::{self, EmbeddingProvider, SentimentLexicon};
use crate::stats::{self, StatTestResult};
use crate::textseg;

pub use svg::{ridge_curves, LAYOUT};

pub const SCHEMA_VERSION: u32 = 1;
/// Metrics drawn in the scatter matrix.
pub const PRIMARY_METRICS: [Metric; 4] = [
    Metric::TokenDiversity,
    Metric::UniqueWordRatio,
    Metric::AvgWordLength,
    Metric::SentenceComplexity,
];
pub const HOLM_FAMILY: &str = "per metric, across model pairs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResponse {
    pub prompt_id: String,
    pub metrics: MetricVector,
}

/// Every metric for one response. A response without tokens scores `None`
/// everywhere.
pub fn score_response(
    record: &ResponseRecord,
    provider: &dyn EmbeddingProvider,
    lexicon: &SentimentLexicon,
) -> Result<MetricVector> {
    let tokens = textseg::tokenize_words(&record.response);
    let mut v = MetricVector::lexical(&record.response, &tokens);
    if tokens.is_empty() {
        return Ok(v);
    }
    v.fk_grade = semmetrics::fk_grade(&record.response).ok();
    v.sentiment = Some(semmetrics::sentiment_compound(&record.response, lexicon));
    v.semantic_similarity = Some(semmetrics::semantic_similarity(
        &record.prompt,
        &record.response,
        provider,
    )?);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Descriptive {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Descriptive {
            min: s[0],
            q1: stats::quantile(&s, 0.25),
            median: stats::quantile(&s, 0.5),
            q3: stats::quantile(&s, 0.75),
            max: s[s.len() - 1],
            mean: stats::mean(&s),
            sd: stats::sample_sd(&s),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: usize,
    /// Responses on which the metric was undefined.
    pub excluded: usize,
    pub stats: Option<Descriptive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub model: String,
    pub n: usize,
    pub vectors: Vec<ScoredResponse>,
    pub descriptive: BTreeMap<Metric, MetricSummary>,
    pub vocabulary_size: usize,
    /// Yule's K over the model's pooled token stream.
    pub pooled_yules_k: Option<f64>,
    pub pooled_hapax_ratio: Option<f64>,
}

impl ModelProfile {
    /// Builds the aggregate part of a profile from already-scored responses.
    pub fn from_scored(
        model: impl Into<String>,
        vectors: Vec<ScoredResponse>,
        vocabulary_size: usize,
        pooled_yules_k: Option<f64>,
        pooled_hapax_ratio: Option<f64>,
    ) -> Self {
        let mut descriptive = BTreeMap::new();
        for metric in Metric::ALL {
            let values: Vec<f64> = vectors
                .iter()
                .filter_map(|s| s.metrics.get(metric))
                .collect();
            descriptive.insert(
                metric,
                MetricSummary {
                    count: values.len(),
                    excluded: vectors.len() - values.len(),
                    stats: Descriptive::of(&values),
                },
            );
        }
        ModelProfile {
            model: model.into(),
            n: vectors.len(),
            vectors,
            descriptive,
            vocabulary_size,
            pooled_yules_k,
            pooled_hapax_ratio,
        }
    }

    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.vectors
            .iter()
            .filter_map(|s| s.metrics.get(metric))
            .collect()
    }
}

/// Scores every response of one model (in parallel) and aggregates.
pub fn profile_model(
    responses: &[ResponseRecord],
    provider: &dyn EmbeddingProvider,
    lexicon: &SentimentLexicon,
) -> Result<ModelProfile> {
    let first = responses
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot profile an empty response set".into()))?;
    if let Some(other) = responses.iter().find(|r| r.model != first.model) {
        return Err(Error::InvalidArgument(format!(
            "mixed models in one profile: `{}` and `{}`",
            first.model, other.model
        )));
    }
    let vectors = responses
        .par_iter()
        .map(|r| {
            Ok(ScoredResponse {
                prompt_id: r.prompt_id.clone(),
                metrics: score_response(r, provider, lexicon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let token_lists: Vec<Vec<textseg::Token>> = responses
        .iter()
        .map(|r| textseg::tokenize_words(&r.response))
        .collect();
    let pooled = FrequencySpectrum::pooled(token_lists.iter().map(Vec::as_slice));
    Ok(ModelProfile::from_scored(
        first.model.clone(),
        vectors,
        lexmetrics::vocabulary_size(responses),
        lexmetrics::yules_k(&pooled).ok(),
        lexmetrics::hapax_ratio(&pooled).ok(),
    ))
}

/// Profiles each model of a corpus, models in lexicographic order.
pub fn profile_corpus(
    records: &[ResponseRecord],
    provider: &dyn EmbeddingProvider,
    lexicon: &SentimentLexicon,
) -> Result<Vec<ModelProfile>> {
    let mut groups: BTreeMap<&str, Vec<ResponseRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.model.as_str()).or_default().push(r.clone());
    }
    groups
        .into_par_iter()
        .map(|(_, rs)| profile_model(&rs, provider, lexicon))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmnibusEntry {
    pub metric: Metric,
    pub test: Option<StatTestResult>,
    /// Why the test was skipped, when it was.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEntry {
    pub metric: Metric,
    pub model_a: String,
    pub model_b: String,
    pub test: Option<StatTestResult>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<Metric>,
    /// Pearson r over responses where both metrics are defined.
    pub r: Vec<Vec<Option<f64>>>,
    pub n: Vec<Vec<usize>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: Metric, b: Metric) -> Option<f64> {
        let i = self.metrics.iter().position(|&m| m == a)?;
        let j = self.metrics.iter().position(|&m| m == b)?;
        self.r[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub models: Vec<String>,
    pub metrics: Vec<Metric>,
    pub omnibus: Vec<OmnibusEntry>,
    pub pairwise: Vec<PairwiseEntry>,
    pub holm_family: String,
    pub correlations: CorrelationMatrix,
}

impl ComparisonReport {
    pub fn omnibus_for(&self, metric: Metric) -> Option<&OmnibusEntry> {
        self.omnibus.iter().find(|e| e.metric == metric)
    }

    pub fn pairwise_for(&self, metric: Metric) -> impl Iterator<Item = &PairwiseEntry> {
        self.pairwise.iter().filter(move |e| e.metric == metric)
    }
}

fn all_identical(groups: &[Vec<f64>]) -> bool {
    let mut it = groups.iter().flatten();
    match it.next() {
        None => true,
        Some(first) => it.all(|v| v == first),
    }
}

/// Kruskal-Wallis per metric, pairwise Mann-Whitney U with per-metric Holm
/// adjustment, and a pooled Pearson matrix. Profiles are processed in model
/// name order, so the result does not depend on input order.
pub fn compare_models(profiles: &[ModelProfile]) -> Result<ComparisonReport> {
    if profiles.len() < 2 {
        return Err(Error::InvalidArgument(
            "comparison needs at least 2 profiles".into(),
        ));
    }
    let mut sorted: Vec<&ModelProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.model.cmp(&b.model));
    let mut names = HashSet::new();
    if let Some(dup) = sorted.iter().find(|p| !names.insert(p.model.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "model `{}` appears twice",
            dup.model
        )));
    }

    let mut omnibus = Vec::new();
    let mut pairwise = Vec::new();
    for metric in Metric::ALL {
        let groups: Vec<Vec<f64>> = sorted.iter().map(|p| p.values(metric)).collect();
        let degenerate = all_identical(&groups);
        let (test, flag) = if degenerate {
            (None, Some("degenerate: all values identical".to_string()))
        } else {
            match stats::kruskal_wallis(&groups) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        omnibus.push(OmnibusEntry { metric, test, flag });

        let mut entries = Vec::new();
        for i in 0..sorted.len() {
            for j in i + 1..sorted.len() {
                let (test, flag) = if degenerate {
                    (None, Some("degenerate: all values identical".to_string()))
                } else {
                    match stats::mann_whitney_u(&groups[i], &groups[j]) {
                        Ok(t) => (Some(t), None),
                        Err(e) => (None, Some(e.to_string())),
                    }
                };
                entries.push(PairwiseEntry {
                    metric,
                    model_a: sorted[i].model.clone(),
                    model_b: sorted[j].model.clone(),
                    test,
                    flag,
                });
            }
        }
        let raw: Vec<f64> = entries
            .iter()
            .filter_map(|e| e.test.as_ref().map(|t| t.p_value))
            .collect();
        let mut adjusted = stats::holm_correct(&raw)?.into_iter();
        for t in entries.iter_mut().filter_map(|e| e.test.as_mut()) {
            t.p_adjusted = adjusted.next();
        }
        pairwise.extend(entries);
    }

    Ok(ComparisonReport {
        models: sorted.iter().map(|p| p.model.clone()).collect(),
        metrics: Metric::ALL.to_vec(),
        omnibus,
        pairwise,
        holm_family: HOLM_FAMILY.into(),
        correlations: correlation_matrix(&sorted, &Metric::ALL),
    })
}

fn correlation_matrix(profiles: &[&ModelProfile], metrics: &[Metric]) -> CorrelationMatrix {
    let rows: Vec<&MetricVector> = profiles
        .iter()
        .flat_map(|p| p.vectors.iter().map(|s| &s.metrics))
        .collect();
    let k = metrics.len();
    let mut r = vec![vec![None; k]; k];
    let mut n = vec![vec![0usize; k]; k];
    for i in 0..k {
        for j in i..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter_map(|v| Some((v.get(metrics[i])?, v.get(metrics[j])?)))
                .unzip();
            let value = stats::pearson_r(&xs, &ys)
                .ok()
                .map(|v| if i == j { 1.0 } else { v });
            r[i][j] = value;
            r[j][i] = value;
            n[i][j] = xs.len();
            n[j][i] = xs.len();
        }
    }
    CorrelationMatrix {
        metrics: metrics.to_vec(),
        r,
        n,
    }
}

/// Output of the `profile` stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub schema_version: u32,
    pub profiles: Vec<ModelProfile>,
}

/// Output of the `compare` stage and input of `render`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub report: ComparisonReport,
    pub profiles: Vec<ModelProfile>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn check_schema(found: u32) -> Result<()> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "unsupported schema_version {found} (expected {SCHEMA_VERSION})"
        )))
    }
}

impl ProfileDocument {
    pub fn new(profiles: Vec<ModelProfile>) -> Self {
        ProfileDocument {
            schema_version: SCHEMA_VERSION,
            profiles,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let doc: Self = read_json(path.as_ref())?;
        check_schema(doc.schema_version)?;
        Ok(doc)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }
}

impl ReportDocument {
    pub fn new(report: ComparisonReport, mut profiles: Vec<ModelProfile>) -> Self {
        profiles.sort_by(|a, b| a.model.cmp(&b.model));
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            report,
            profiles,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let doc: Self = read_json(path.as_ref())?;
        check_schema(doc.schema_version)?;
        Ok(doc)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Writes the report in `format` under `out_dir` and returns the paths written.
///
/// * json: `report.json`
/// * csv: `metrics.csv` (one row per response) and `tests.csv`
/// * svg: `lexical_bars.svg`, `ridge_plots.svg`, `scatter_matrix.svg`
pub fn emit_report(
    report: &ComparisonReport,
    profiles: &[ModelProfile],
    format: Format,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut profiles = profiles.to_vec();
    profiles.sort_by(|a, b| a.model.cmp(&b.model));

    match format {
        Format::Json => {
            let path = out_dir.join("report.json");
            ReportDocument::new(report.clone(), profiles).write(&path)?;
            Ok(vec![path])
        }
        Format::Csv => {
            let metrics = out_dir.join("metrics.csv");
            fs::write(&metrics, metrics_csv(&profiles)?).map_err(|e| Error::io(&metrics, e))?;
            let tests = out_dir.join("tests.csv");
            fs::write(&tests, tests_csv(report)?).map_err(|e| Error::io(&tests, e))?;
            Ok(vec![metrics, tests])
        }
        Format::Svg => {
            let files = [
                ("lexical_bars.svg", svg::lexical_bars(&profiles)),
                (
                    "ridge_plots.svg",
                    svg::ridge_plots(&profiles, &report.metrics),
                ),
                (
                    "scatter_matrix.svg",
                    svg::scatter_matrix(&profiles, &report.correlations),
                ),
            ];
            files
                .into_iter()
                .map(|(name, body)| {
                    let path = out_dir.join(name);
                    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
                    Ok(path)
                })
                .collect()
        }
    }
}

fn fixed6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

pub fn metrics_csv(profiles: &[ModelProfile]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "model".to_string(),
        "prompt_id".into(),
        "token_count".into(),
    ];
    header.extend(Metric::ALL.iter().map(|m| m.name().to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for p in profiles {
        for s in &p.vectors {
            let mut row = vec![
                p.model.clone(),
                s.prompt_id.clone(),
                s.metrics.token_count.to_string(),
            ];
            row.extend(Metric::ALL.iter().map(|&m| fixed6(s.metrics.get(m))));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

pub fn tests_csv(report: &ComparisonReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "metric",
        "test",
        "model_a",
        "model_b",
        "statistic",
        "df",
        "p_value",
        "p_adjusted",
        "method",
        "group_sizes",
        "effect_size",
        "flag",
    ])
    .map_err(csv_error)?;
    let row = |metric: Metric,
               kind: &str,
               a: &str,
               b: &str,
               t: Option<&StatTestResult>,
               flag: Option<&String>| {
        let sizes = t
            .map(|t| {
                t.group_sizes
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        vec![
            metric.name().to_string(),
            kind.to_string(),
            a.to_string(),
            b.to_string(),
            fixed6(t.map(|t| t.statistic)),
            t.map(|t| t.df.to_string()).unwrap_or_default(),
            fixed6(t.map(|t| t.p_value)),
            fixed6(t.and_then(|t| t.p_adjusted)),
            t.map(|t| t.method.clone()).unwrap_or_default(),
            sizes,
            fixed6(t.and_then(|t| t.effect_size)),
            flag.cloned().unwrap_or_default(),
        ]
    };
    for e in &report.omnibus {
        w.write_record(row(
            e.metric,
            "omnibus",
            "",
            "",
            e.test.as_ref(),
            e.flag.as_ref(),
        ))
        .map_err(csv_error)?;
    }
    for e in &report.pairwise {
        w.write_record(row(
            e.metric,
            "pairwise",
            &e.model_a,
            &e.model_b,
            e.test.as_ref(),
            e.flag.as_ref(),
        ))
        .map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}
