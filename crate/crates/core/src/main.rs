use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use lexprofile::corpus::{self, FilterPolicy, LoadMode};
use lexprofile::genharness::{
    self, BenchConfig, GenerationTask, HttpCompleter, ResponseShape, RetryPolicy,
};
use lexprofile::report::{self, Format, ProfileDocument, ReportDocument};
use lexprofile::semmetrics::{EmbeddingProvider, HashedEmbedder, HttpEmbedder, SentimentLexicon};
use lexprofile::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lexprofile",
    version,
    about = "Lexical and semantic profiling of generated text corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter and rewrite a JSONL corpus.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Skip malformed lines instead of failing.
        #[arg(long)]
        lenient: bool,
        #[arg(long, default_value_t = FilterPolicy::default().min_tokens)]
        min_tokens: usize,
        #[arg(long)]
        max_tokens: Option<usize>,
        /// Keep exact duplicate responses.
        #[arg(long)]
        no_dedup: bool,
        #[arg(long)]
        per_model_cap: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score every response and write per-model profiles.
    Profile {
        #[arg(long)]
        corpus: PathBuf,
        /// Sentiment lexicon (`token<TAB>valence` lines); the bundled one by default.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// `builtin` or `http:<url>`.
        #[arg(long, default_value = "builtin")]
        embedder: String,
        /// Vector dimension expected from an HTTP embedder.
        #[arg(long, default_value_t = 512)]
        embed_dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the statistical comparison across profiles.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        profiles: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a comparison report as JSON, CSV or SVG.
    Render {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample responses from an endpoint as described by a TOML config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a model on a multiple-choice item file.
    Bench {
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "simple")]
        shape: ShapeArg,
        /// File holding a prompt template with `{question}` and `{choices}`.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, default_value_t = RetryPolicy::default().retries)]
        retries: usize,
        #[arg(long, default_value_t = 120)]
        timeout_secs: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Simple,
    Openai,
    Ollama,
}

fn embedder(spec: &str, dimension: usize) -> Result<Box<dyn EmbeddingProvider>> {
    match spec {
        "builtin" => Ok(Box::new(HashedEmbedder::default())),
        _ => match spec.strip_prefix("http:") {
            Some(url) if !url.is_empty() => Ok(Box::new(HttpEmbedder::new(url, dimension, 4))),
            _ => Err(Error::InvalidArgument(format!(
                "--embedder must be `builtin` or `http:<url>`, got `{spec}`"
            ))),
        },
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            input,
            lenient,
            min_tokens,
            max_tokens,
            no_dedup,
            per_model_cap,
            output,
        } => {
            let mode = if lenient {
                LoadMode::Lenient
            } else {
                LoadMode::Strict
            };
            let loaded = corpus::load_jsonl(&input, mode)?;
            let policy = FilterPolicy {
                min_tokens,
                max_tokens,
                drop_exact_duplicates: !no_dedup,
                per_model_cap,
            };
            policy.validate()?;
            let (kept, r) = corpus::filter_corpus(&loaded.corpus, &policy);
            kept.write_jsonl(&output)?;
            eprintln!(
                "kept {} of {} (short {}, long {}, duplicate {}, capped {}); {} malformed lines skipped",
                r.kept,
                r.total(),
                r.dropped_short,
                r.dropped_long,
                r.dropped_duplicate,
                r.dropped_capped,
                loaded.skipped.len()
            );
        }
        Command::Profile {
            corpus,
            lexicon,
            embedder: spec,
            embed_dim,
            out,
        } => {
            let loaded = corpus::load_jsonl(&corpus, LoadMode::Strict)?;
            if loaded.corpus.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "{} has no records",
                    corpus.display()
                )));
            }
            let owned;
            let lexicon = match lexicon {
                Some(path) => {
                    owned = SentimentLexicon::from_file(path)?;
                    &owned
                }
                None => SentimentLexicon::builtin(),
            };
            let provider = embedder(&spec, embed_dim)?;
            let profiles =
                report::profile_corpus(&loaded.corpus.records, provider.as_ref(), lexicon)?;
            ProfileDocument::new(profiles).write(&out)?;
        }
        Command::Compare { profiles, out } => {
            let mut all = Vec::new();
            for path in &profiles {
                all.extend(ProfileDocument::read(path)?.profiles);
            }
            let comparison = report::compare_models(&all)?;
            ReportDocument::new(comparison, all).write(&out)?;
        }
        Command::Render {
            report: path,
            format,
            out_dir,
        } => {
            let doc = ReportDocument::read(&path)?;
            let format = match format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
                FormatArg::Svg => Format::Svg,
            };
            for written in report::emit_report(&doc.report, &doc.profiles, format, &out_dir)? {
                println!("{}", written.display());
            }
        }
        Command::Generate { config, out } => {
            let task = GenerationTask::from_file(&config)?;
            let out = out.or_else(|| task.output.clone()).ok_or_else(|| {
                Error::Config("no output path: set `output` or pass --out".into())
            })?;
            let summary = genharness::generate_samples(&task, &task.http_completer(), &out)?;
            eprintln!(
                "wrote {} records to {} ({} retries, {} failures)",
                summary.records.len(),
                out.display(),
                summary.retries,
                summary.failures.len()
            );
            if !summary.failures.is_empty() && summary.records.is_empty() {
                return Err(Error::Provider {
                    endpoint: task.endpoint,
                    reason: "every request failed".into(),
                });
            }
        }
        Command::Bench {
            endpoint,
            model,
            items,
            out,
            shape,
            template,
            parallelism,
            retries,
            timeout_secs,
        } => {
            let items = genharness::load_bench_items(&items)?;
            let shape = match shape {
                ShapeArg::Simple => ResponseShape::Simple,
                ShapeArg::Openai => ResponseShape::OpenAi,
                ShapeArg::Ollama => ResponseShape::Ollama,
            };
            let mut config = BenchConfig {
                parallelism,
                ..BenchConfig::default()
            };
            config.retry.retries = retries;
            if let Some(path) = template {
                config.template = read_to_string(&path)?;
            }
            let completer = HttpCompleter::new(&endpoint, shape, Duration::from_secs(timeout_secs));
            let result = genharness::run_benchmark(&completer, &model, &items, &config)?;
            let mut text = serde_json::to_string_pretty(&result)?;
            text.push('\n');
            std::fs::write(&out, text).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            eprintln!(
                "{model}: {}/{} correct, {} unparseable, accuracy {:.4}",
                result.correct, result.total, result.unparseable, result.accuracy
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
