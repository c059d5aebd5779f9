//! The `sentibench` command line.
//!
//! Every command resolves its configuration (flags > `--config` file >
//! defaults), logs it to stderr, writes an optional JSON report atomically
//! and prints a human table in the requested `--format`. Exit codes: 0 on
//! success, 1 for evaluation-domain errors, 2 for I/O and configuration errors.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, Dataset, IngestReport};
use crate::error::{Error, Result};
use crate::eval::render::{self, Table};
use crate::eval::{
    self, CorpusStats, CrossEvalConfig, CrossEvalMatrix, EvalReport, OverlapMatrix, SweepPoint, TfidfConfig,
};
use crate::model::{LinearModel, TrainConfig, TrainSummary};
use crate::partition::{self, SplitName, Splits, StratifyKey};
use crate::textprep::{self, NormalizationConfig};
use crate::util::write_atomic_bytes;
use crate::vectorize::{self, EmbeddingFeatures, FeatureSpace, TfidfMode, Vectorizer};
use crate::vocab::{build_vocabulary, count_ngrams, NgramRange, Vocabulary};

pub use config::{ConfigOverlay, OutputFormat, RunConfig, SharedFlags};

/// Environment variable naming the directory with the public datasets.
pub const DATA_DIR_ENV: &str = "SENTIBENCH_DATA_DIR";

pub const PAPER_SWEEP_SIZES: &str = "50,100,300,1000,5000,10000,25000,50000,75000,100000,250000,500000";

#[derive(Debug, Parser)]
#[command(name = "sentibench", version, about = "Portuguese review sentiment benchmark")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct SharedArgs {
    /// Stopword list (one word per line); defaults to the shipped Portuguese list
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores); outputs do not depend on it
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// raw | smoothed
    #[arg(long, global = true)]
    pub tfidf_mode: Option<String>,
    /// N-gram range, e.g. 1..3
    #[arg(long, global = true)]
    pub ngrams: Option<String>,
    #[arg(long, global = true)]
    pub vocab_size: Option<usize>,
    #[arg(long, global = true)]
    pub min_count: Option<u64>,
    /// Pretrained word2vec-style text embeddings
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// 50 | 100 | 300
    #[arg(long, global = true)]
    pub embedding_dim: Option<usize>,
    /// json | md | tsv
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// L2 regularization strength (default 1/n_samples)
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    #[arg(long, global = true)]
    pub col_text: Option<String>,
    #[arg(long, global = true)]
    pub col_rating: Option<String>,
    #[arg(long, global = true)]
    pub col_id: Option<String>,
    /// Column with pre-assigned folds (published partitions)
    #[arg(long, global = true)]
    pub col_fold: Option<String>,
    /// TOML key = value file merged under explicit flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl SharedArgs {
    fn flags(&self) -> SharedFlags {
        SharedFlags {
            seed: self.seed,
            threads: self.threads,
            stopwords: self.stopwords.clone(),
            tfidf_mode: self.tfidf_mode.clone(),
            ngrams: self.ngrams.clone(),
            vocab_size: self.vocab_size,
            min_count: self.min_count,
            embeddings: self.embeddings.clone(),
            embedding_dim: self.embedding_dim,
            format: self.format.clone(),
            lambda: self.lambda,
            tol: self.tol,
            max_epochs: self.max_epochs,
            col_text: self.col_text.clone(),
            col_rating: self.col_rating.clone(),
            col_id: self.col_id.clone(),
            col_fold: self.col_fold.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest raw CSV exports, tokenize and write the consolidated CSV
    Prepare {
        /// DATASET=PATH, repeatable (olist, buscape, b2w, utlc_apps, utlc_movies)
        #[arg(long = "input", required = true, value_name = "DATASET=PATH")]
        inputs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Assign stratified folds 1..10 and rewrite the consolidated CSV
    Partition {
        #[arg(long)]
        corpus: PathBuf,
        /// Output path (default: rewrite the input)
        #[arg(long)]
        out: Option<PathBuf>,
        /// rating | polarity
        #[arg(long, default_value = "polarity")]
        stratify: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sample counts, lengths, vocabulary sizes, label distribution and overlap
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a polarity model on the training and validation folds
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Dataset key or `all`
        #[arg(long, default_value = "all")]
        dataset: String,
        #[arg(long)]
        model: PathBuf,
        /// Vocabulary (tf-idf) or eligible-word list (embeddings); default `<model>.vocab.tsv`
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a split with a saved model
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "all")]
        dataset: String,
        #[arg(long)]
        model: PathBuf,
        /// Default `<model>.vocab.tsv`
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// train | validation | test
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test ROC-AUC as a function of the tf-idf vocabulary size
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "all")]
        dataset: String,
        /// Comma-separated ascending sizes
        #[arg(long, default_value = PAPER_SWEEP_SIZES)]
        sizes: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on each dataset (and all combined), test on every dataset
    CrossEval {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated dataset keys (default: every dataset in the corpus)
        #[arg(long)]
        datasets: Option<String>,
        /// Add a column scored on all test splits together
        #[arg(long)]
        all_column: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved JSON report as a table
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prepare { .. } => "prepare",
            Command::Partition { .. } => "partition",
            Command::Stats { .. } => "stats",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Sweep { .. } => "sweep",
            Command::CrossEval { .. } => "cross-eval",
            Command::Report { .. } => "report",
        }
    }
}

/// Algorithmic settings recorded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub tfidf_mode: TfidfMode,
    pub ngrams: NgramRange,
    pub vocab_size: usize,
    pub min_count: u64,
    pub embeddings: Option<String>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub command: String,
    pub seed: u64,
    pub settings: ReportSettings,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareResult {
    pub files: Vec<IngestReport>,
    pub n_reviews: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCountRow {
    pub dataset: Dataset,
    pub stratum: String,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub stratify: StratifyKey,
    pub n_reviews: usize,
    pub folds: Vec<FoldCountRow>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResult {
    pub datasets: Vec<CorpusStats>,
    pub overlap: Option<OverlapMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub dataset: String,
    pub n_train: usize,
    pub feature_space: FeatureSpace,
    pub regularization: f64,
    pub summary: TrainSummary,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let overlay = match &cli.shared.config {
        Some(p) => ConfigOverlay::load(p)?,
        None => ConfigOverlay::default(),
    };
    let cfg = RunConfig::resolve(cli.command.name(), &cli.shared.flags(), &overlay)?;
    log::info!(
        "resolved config: {}",
        serde_json::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?
    );
    let mut buf = Vec::new();
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| dispatch(&cli.command, &cfg, &mut buf))?,
        None => dispatch(&cli.command, &cfg, &mut buf)?,
    }
    stdout.write_all(&buf)?;
    Ok(())
}

fn dispatch(command: &Command, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Prepare { inputs, out, report } => cmd_prepare(cfg, inputs, out, report.as_deref(), stdout),
        Command::Partition {
            corpus,
            out,
            stratify,
            report,
        } => cmd_partition(
            cfg,
            corpus,
            out.as_deref().unwrap_or(corpus),
            stratify.parse()?,
            report.as_deref(),
            stdout,
        ),
        Command::Stats { corpus, out } => cmd_stats(cfg, corpus, out.as_deref(), stdout),
        Command::Train {
            corpus,
            dataset,
            model,
            vocab_out,
            out,
        } => {
            let vocab_out = vocab_out.clone().unwrap_or_else(|| sidecar(model));
            cmd_train(cfg, corpus, dataset, model, &vocab_out, out.as_deref(), stdout)
        }
        Command::Eval {
            corpus,
            dataset,
            model,
            vocab,
            split,
            out,
        } => {
            let vocab = vocab.clone().unwrap_or_else(|| sidecar(model));
            cmd_eval(cfg, corpus, dataset, model, &vocab, split, out.as_deref(), stdout)
        }
        Command::Sweep {
            corpus,
            dataset,
            sizes,
            out,
        } => cmd_sweep(cfg, corpus, dataset, sizes, out.as_deref(), stdout),
        Command::CrossEval {
            corpus,
            datasets,
            all_column,
            out,
        } => cmd_crosseval(cfg, corpus, datasets.as_deref(), *all_column, out.as_deref(), stdout),
        Command::Report { input } => cmd_report(cfg, input, stdout),
    }
}

fn sidecar(model: &Path) -> PathBuf {
    let mut name = model.file_name().map(OsString::from).unwrap_or_default();
    name.push(".vocab.tsv");
    model.with_file_name(name)
}

fn settings(cfg: &RunConfig) -> ReportSettings {
    ReportSettings {
        tfidf_mode: cfg.tfidf_mode,
        ngrams: cfg.ngrams,
        vocab_size: cfg.vocab_size,
        min_count: cfg.min_count,
        embeddings: cfg
            .embeddings
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned()),
        train: cfg.train.clone(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Schema(e.to_string()))
}

fn emit<T: Serialize>(
    cfg: &RunConfig,
    out: Option<&Path>,
    result: T,
    tables: Vec<(String, Table)>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let report = Report {
        command: cfg.command.clone(),
        seed: cfg.seed,
        settings: settings(cfg),
        result,
    };
    let json = to_json(&report)? + "\n";
    if let Some(path) = out {
        write_atomic_bytes(path, json.as_bytes())?;
    }
    print_tables(cfg.format, &json, &tables, stdout)
}

fn print_tables(format: OutputFormat, json: &str, tables: &[(String, Table)], stdout: &mut dyn Write) -> Result<()> {
    let text = match format {
        OutputFormat::Json => json.to_owned(),
        OutputFormat::Md => tables
            .iter()
            .map(|(title, t)| format!("### {title}\n\n{}", t.to_markdown()))
            .collect::<Vec<_>>()
            .join("\n"),
        OutputFormat::Tsv => tables
            .iter()
            .map(|(title, t)| format!("# {title}\n{}", t.to_tsv()))
            .collect::<Vec<_>>()
            .join("\n"),
    };
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn normalization(cfg: &RunConfig) -> Result<NormalizationConfig> {
    Ok(match &cfg.stopwords {
        Some(p) => NormalizationConfig::default().with_stopwords(textprep::load_stopwords(p)?),
        None => NormalizationConfig::portuguese(),
    })
}

fn parse_input(spec: &str) -> Result<(Dataset, PathBuf)> {
    let (d, p) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--input expects DATASET=PATH, got `{spec}`")))?;
    Ok((d.parse()?, PathBuf::from(p)))
}

pub fn cmd_prepare(
    cfg: &RunConfig,
    inputs: &[String],
    out: &Path,
    report: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let inputs: Vec<(Dataset, PathBuf)> = inputs.iter().map(|s| parse_input(s)).collect::<Result<_>>()?;
    let norm = normalization(cfg)?;
    let ingested: Vec<(Corpus, IngestReport)> = inputs
        .par_iter()
        .map(|(d, p)| corpus::ingest_raw(p, *d, &cfg.columns_for(*d)))
        .collect::<Result<_>>()?;
    let (parts, reports): (Vec<Corpus>, Vec<IngestReport>) = ingested.into_iter().unzip();
    let mut merged = Corpus::merge("consolidated", parts)?;
    merged.reviews_mut().par_iter_mut().for_each(|r| {
        r.tokens = Some(textprep::preprocess(&r.text, &norm));
    });
    corpus::write_prepared(&merged, out)?;

    let mut t = Table::new([
        "dataset",
        "rows",
        "kept",
        "malformed",
        "empty_text",
        "null_rating",
        "zero_rating",
        "out_of_range",
        "renamed_ids",
    ]);
    for r in &reports {
        t.push([
            r.dataset.clone(),
            r.rows.to_string(),
            r.kept.to_string(),
            r.malformed.to_string(),
            r.empty_text.to_string(),
            r.null_rating.to_string(),
            r.zero_rating.to_string(),
            r.out_of_range_rating.to_string(),
            r.renamed_ids.to_string(),
        ]);
    }
    let result = PrepareResult {
        n_reviews: merged.len(),
        files: reports,
    };
    emit(cfg, report, result, vec![("Ingestion".into(), t)], stdout)
}

pub fn cmd_partition(
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    stratify: StratifyKey,
    report: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let mut corpus = corpus::read_consolidated(input)?;
    let assignment = partition::assign_folds(&corpus, cfg.seed, stratify)?;
    assignment.apply(&mut corpus)?;
    let max_deviation = partition::max_stratum_deviation(&corpus, stratify);
    if max_deviation > 1.0 {
        return Err(Error::Domain(format!("fold stratification off by {max_deviation}")));
    }
    corpus::write_consolidated(&corpus, out)?;

    let folds: Vec<FoldCountRow> = partition::fold_counts(&corpus, stratify)
        .into_iter()
        .map(|((dataset, stratum), counts)| FoldCountRow {
            dataset,
            stratum,
            counts: counts.to_vec(),
        })
        .collect();
    let mut t = Table::new(
        ["dataset".to_string(), "stratum".to_string()]
            .into_iter()
            .chain((1..=10).map(|f| format!("fold{f}"))),
    );
    for row in &folds {
        t.push(
            [row.dataset.key().to_string(), row.stratum.clone()]
                .into_iter()
                .chain(row.counts.iter().map(|c| c.to_string())),
        );
    }
    let result = PartitionResult {
        stratify,
        n_reviews: corpus.len(),
        folds,
        max_deviation,
    };
    emit(
        cfg,
        report,
        result,
        vec![(format!("Fold counts (max deviation {max_deviation:.2})"), t)],
        stdout,
    )
}

/// Per-dataset corpora in canonical order, plus the whole corpus when it
/// holds more than one dataset.
fn stats_groups(corpus: &Corpus) -> Vec<Corpus> {
    let present = corpus.datasets();
    let mut groups: Vec<Corpus> = Dataset::ALL
        .iter()
        .filter(|d| present.contains(d))
        .map(|&d| corpus.subset(d))
        .collect();
    if groups.len() > 1 {
        groups.push(corpus.filter(eval::ALL_COMBINED, |_| true));
    }
    groups
}

pub fn cmd_stats(cfg: &RunConfig, input: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let corpus = corpus::read_consolidated(input)?;
    let groups = stats_groups(&corpus);
    let datasets: Vec<CorpusStats> = groups.iter().map(eval::corpus_stats).collect();

    let per_dataset: Vec<&Corpus> = groups.iter().filter(|g| g.name != eval::ALL_COMBINED).collect();
    let overlap = if per_dataset.len() >= 2 {
        let vocabs = per_dataset
            .iter()
            .map(|g| {
                let docs: Vec<&[String]> = g.reviews().iter().map(|r| r.tokens()).collect();
                let v = build_vocabulary(&count_ngrams(&docs, NgramRange::UNIGRAMS), cfg.min_count, usize::MAX)?;
                Ok((g.name.clone(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(eval::overlap_matrix(&vocabs)?)
    } else {
        None
    };

    let mut tables = render::stats_tables(&datasets);
    if let Some(m) = &overlap {
        tables.push(("Vocabulary overlap (%)".into(), render::overlap_table(m)));
    }
    emit(cfg, out, StatsResult { datasets, overlap }, tables, stdout)
}

/// Polarity-task splits of the selected dataset (`all` = whole corpus).
fn select_splits(corpus: &Corpus, dataset: &str) -> Result<(String, Splits)> {
    let task = corpus::filter_polarity_task(corpus);
    let (name, selected) = if dataset.eq_ignore_ascii_case("all") {
        (eval::ALL_COMBINED.to_owned(), task)
    } else {
        let d: Dataset = dataset.parse()?;
        (d.display_name().to_owned(), task.subset(d))
    };
    if selected.is_empty() {
        return Err(Error::Domain(format!("no polarity-labelled reviews for `{dataset}`")));
    }
    Ok((
        name.clone(),
        partition::split(&Corpus::new(name, selected.into_reviews())?)?,
    ))
}

fn check_both_classes(name: &str, split: &str, reviews: &[&crate::corpus::Review]) -> Result<()> {
    let pos = reviews
        .iter()
        .filter(|r| r.polarity.is_some_and(|p| p.is_positive()))
        .count();
    let labelled = reviews.iter().filter(|r| r.polarity.is_some()).count();
    if pos == 0 || pos == labelled {
        return Err(Error::SingleClass {
            split: format!("{name}/{split}"),
        });
    }
    Ok(())
}

fn tfidf_config(cfg: &RunConfig) -> TfidfConfig {
    TfidfConfig {
        mode: cfg.tfidf_mode,
        ngram_range: cfg.ngrams,
        vocab_size: cfg.vocab_size,
        min_count: cfg.min_count,
    }
}

fn load_table(cfg: &RunConfig) -> Result<Option<Arc<vectorize::EmbeddingTable>>> {
    cfg.embeddings
        .as_ref()
        .map(|p| vectorize::load_embeddings(p, cfg.embedding_dim).map(Arc::new))
        .transpose()
}

pub fn cmd_train(
    cfg: &RunConfig,
    input: &Path,
    dataset: &str,
    model_path: &Path,
    vocab_out: &Path,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let corpus = corpus::read_consolidated(input)?;
    let (name, splits) = select_splits(&corpus, dataset)?;
    let dev = splits.development();
    check_both_classes(&name, "train+validation", &dev)?;

    let (model, summary, vocabulary) = match load_table(cfg)? {
        Some(table) => {
            let clf = eval::fit_embedding_classifier(&dev, table, cfg.min_count, &cfg.train)?;
            let (docs, _) = eval::labelled(dev.iter().copied());
            let eligible = build_vocabulary(&count_ngrams(&docs, NgramRange::UNIGRAMS), cfg.min_count, usize::MAX)?;
            (clf.model, clf.summary, eligible)
        }
        None => {
            let clf = eval::fit_tfidf_classifier(&dev, &tfidf_config(cfg), &cfg.train)?;
            let vocab = clf.vectorizer.vocabulary().clone();
            (clf.model, clf.summary, vocab)
        }
    };
    vocabulary.write_tsv(vocab_out)?;
    model.save(model_path)?;

    let result = TrainResult {
        dataset: name,
        n_train: dev.len(),
        feature_space: model.feature_space.clone(),
        regularization: model.regularization,
        summary,
    };
    let mut t = Table::new(["dataset", "n_train", "features", "epochs", "final_loss", "stop"]);
    t.push([
        result.dataset.clone(),
        result.n_train.to_string(),
        result.feature_space.to_string(),
        result.summary.epochs.to_string(),
        format!("{:.6}", result.summary.final_loss),
        format!("{:?}", result.summary.stop),
    ]);
    emit(cfg, out, result, vec![("Training".into(), t)], stdout)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    cfg: &RunConfig,
    input: &Path,
    dataset: &str,
    model_path: &Path,
    vocab_path: &Path,
    split: &str,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let model = LinearModel::load(model_path)?;
    let vocabulary = Vocabulary::read_tsv(vocab_path)?;
    let corpus = corpus::read_consolidated(input)?;
    let (name, splits) = select_splits(&corpus, dataset)?;
    let (split_name, part) = match split {
        "train" => (SplitName::Train, &splits.train),
        "validation" => (SplitName::Validation, &splits.validation),
        "test" => (SplitName::Test, &splits.test),
        other => {
            return Err(Error::Config(format!(
                "unknown split `{other}` (train|validation|test)"
            )))
        }
    };
    let reviews: Vec<_> = part.reviews().iter().collect();
    check_both_classes(&name, split, &reviews)?;

    let kind = &model.feature_space.kind;
    let report = if kind.starts_with("embedding") {
        let table = load_table(cfg)?
            .ok_or_else(|| Error::Config(format!("model uses `{kind}` features; pass --embeddings")))?;
        let features = EmbeddingFeatures::new(table, &vocabulary);
        evaluate_saved(model, features, &name, split_name, &reviews)?
    } else {
        let mode = kind
            .strip_prefix("tfidf-")
            .map(str::parse)
            .transpose()?
            .unwrap_or(cfg.tfidf_mode);
        let tfidf = vectorize::fit_tfidf(vocabulary, mode)?;
        evaluate_saved(model, tfidf, &name, split_name, &reviews)?
    };
    let t = render::eval_table(std::slice::from_ref(&report));
    emit(cfg, out, report, vec![("Evaluation".into(), t)], stdout)
}

fn evaluate_saved<Z: Vectorizer>(
    model: LinearModel,
    vectorizer: Z,
    name: &str,
    split: SplitName,
    reviews: &[&crate::corpus::Review],
) -> Result<EvalReport> {
    model.check_space(&vectorizer.feature_space())?;
    let clf = eval::Classifier {
        vectorizer,
        model,
        summary: TrainSummary {
            epochs: 0,
            final_loss: f64::NAN,
            grad_inf_norm: f64::NAN,
            stop: crate::model::StopReason::Converged,
        },
    };
    clf.evaluate(name, split, reviews)
}

fn parse_sizes(sizes: &str) -> Result<Vec<usize>> {
    sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid vocabulary size `{s}`")))
        })
        .collect()
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    input: &Path,
    dataset: &str,
    sizes: &str,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let sizes = parse_sizes(sizes)?;
    let corpus = corpus::read_consolidated(input)?;
    let (name, splits) = select_splits(&corpus, dataset)?;
    let points: Vec<SweepPoint> = eval::sweep_vocab_sizes(&name, &splits, &sizes, &tfidf_config(cfg), &cfg.train)?;
    let t = render::sweep_table(&points);
    emit(
        cfg,
        out,
        points,
        vec![(format!("ROC-AUC (%) per vocabulary size, {name}"), t)],
        stdout,
    )
}

pub fn cmd_crosseval(
    cfg: &RunConfig,
    input: &Path,
    datasets: Option<&str>,
    all_column: bool,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let corpus = corpus::read_consolidated(input)?;
    let task = corpus::filter_polarity_task(&corpus);
    let chosen: Vec<Dataset> = match datasets {
        Some(list) => list.split(',').map(|s| s.parse()).collect::<Result<_>>()?,
        None => {
            let present = task.datasets();
            Dataset::ALL.into_iter().filter(|d| present.contains(d)).collect()
        }
    };
    let splits = chosen
        .iter()
        .map(|&d| {
            let sub = task.subset(d);
            if sub.is_empty() {
                return Err(Error::Domain(format!("no polarity-labelled reviews for `{d}`")));
            }
            Ok((d.display_name().to_owned(), partition::split(&sub)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = CrossEvalConfig {
        tfidf: tfidf_config(cfg),
        train: cfg.train.clone(),
        include_all_column: all_column,
    };
    let matrix: CrossEvalMatrix = eval::cross_eval(&splits, &config)?;
    let t = render::cross_table(&matrix);
    emit(cfg, out, matrix, vec![("Cross-dataset ROC-AUC (%)".into(), t)], stdout)
}

fn result_of<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Schema(format!("report result: {e}")))
}

pub fn cmd_report(cfg: &RunConfig, input: &Path, stdout: &mut dyn Write) -> Result<()> {
    let bytes = std::fs::read(input).map_err(|e| Error::io(input, e))?;
    let report: Report<serde_json::Value> =
        serde_json::from_slice(&bytes).map_err(|e| Error::Schema(format!("report file: {e}")))?;
    let tables = match report.command.as_str() {
        "stats" => {
            let r: StatsResult = result_of(report.result.clone())?;
            let mut tables = render::stats_tables(&r.datasets);
            if let Some(m) = &r.overlap {
                tables.push(("Vocabulary overlap (%)".into(), render::overlap_table(m)));
            }
            tables
        }
        "eval" => {
            let r: EvalReport = result_of(report.result.clone())?;
            vec![("Evaluation".into(), render::eval_table(&[r]))]
        }
        "sweep" => {
            let r: Vec<SweepPoint> = result_of(report.result.clone())?;
            vec![("ROC-AUC (%) per vocabulary size".into(), render::sweep_table(&r))]
        }
        "cross-eval" => {
            let r: CrossEvalMatrix = result_of(report.result.clone())?;
            vec![("Cross-dataset ROC-AUC (%)".into(), render::cross_table(&r))]
        }
        other => {
            return Err(Error::Schema(format!("no table layout for `{other}` reports")));
        }
    };
    let json = String::from_utf8_lossy(&bytes).into_owned();
    print_tables(cfg.format, &json, &tables, stdout)
}
