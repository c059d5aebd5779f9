//! Run configuration: explicit flags, then the `--config` overlay file, then
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ColumnMap, Dataset};
use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::vectorize::TfidfMode;
use crate::vocab::{NgramRange, DEFAULT_MIN_COUNT, MAX_VOCAB_SIZE};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Md,
    Tsv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Md => "md",
            OutputFormat::Tsv => "tsv",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "md" | "markdown" => Ok(OutputFormat::Md),
            "tsv" => Ok(OutputFormat::Tsv),
            _ => Err(Error::Config(format!("unknown format `{s}` (json|md|tsv)"))),
        }
    }
}

/// Column names for one dataset in the overlay file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnOverlay {
    pub text: Option<String>,
    pub rating: Option<String>,
    pub id: Option<String>,
    pub fold: Option<String>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverlay {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub tfidf_mode: Option<String>,
    pub ngrams: Option<String>,
    pub vocab_size: Option<usize>,
    pub min_count: Option<u64>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
    pub format: Option<String>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_epochs: Option<usize>,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnOverlay>,
}

impl ConfigOverlay {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Shared flags as given on the command line (unset = `None`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SharedFlags {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub tfidf_mode: Option<String>,
    pub ngrams: Option<String>,
    pub vocab_size: Option<usize>,
    pub min_count: Option<u64>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
    pub format: Option<String>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_epochs: Option<usize>,
    pub col_text: Option<String>,
    pub col_rating: Option<String>,
    pub col_id: Option<String>,
    pub col_fold: Option<String>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    /// `None` uses every core.
    pub threads: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub tfidf_mode: TfidfMode,
    pub ngrams: NgramRange,
    pub vocab_size: usize,
    pub min_count: u64,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
    pub format: OutputFormat,
    pub train: TrainConfig,
    pub columns: BTreeMap<String, ColumnMap>,
}

impl RunConfig {
    pub fn resolve(command: &str, flags: &SharedFlags, overlay: &ConfigOverlay) -> Result<Self> {
        fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
            flag.clone().or_else(|| file.clone())
        }
        let seed = pick(&flags.seed, &overlay.seed).unwrap_or(DEFAULT_SEED);
        let threads = pick(&flags.threads, &overlay.threads);
        if threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        let tfidf_mode = pick(&flags.tfidf_mode, &overlay.tfidf_mode)
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(TfidfMode::SmoothedL2);
        let ngrams = pick(&flags.ngrams, &overlay.ngrams)
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(NgramRange::UP_TO_TRIGRAMS);
        let vocab_size = pick(&flags.vocab_size, &overlay.vocab_size).unwrap_or(MAX_VOCAB_SIZE);
        if vocab_size == 0 || vocab_size > MAX_VOCAB_SIZE {
            return Err(Error::Config(format!("--vocab-size must be in 1..={MAX_VOCAB_SIZE}")));
        }
        let embedding_dim = pick(&flags.embedding_dim, &overlay.embedding_dim);
        if let Some(d) = embedding_dim {
            if ![50, 100, 300].contains(&d) {
                return Err(Error::Config(format!(
                    "--embedding-dim must be 50, 100 or 300, got {d}"
                )));
            }
        }
        let format = pick(&flags.format, &overlay.format)
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(OutputFormat::Md);

        let defaults = TrainConfig::default();
        let train = TrainConfig {
            lambda: pick(&flags.lambda, &overlay.lambda),
            tol: pick(&flags.tol, &overlay.tol).unwrap_or(defaults.tol),
            max_epochs: pick(&flags.max_epochs, &overlay.max_epochs).unwrap_or(defaults.max_epochs),
            init: defaults.init,
            seed,
        };
        let non_negative = |v: f64| v >= 0.0 && v.is_finite();
        if !train.lambda.is_none_or(non_negative) || !non_negative(train.tol) {
            return Err(Error::Config("--lambda and --tol must be non-negative".into()));
        }

        // flags override every dataset's file columns, file overrides defaults
        let mut columns = BTreeMap::new();
        for d in Dataset::ALL {
            let file = overlay
                .columns
                .iter()
                .find(|(k, _)| k.parse::<Dataset>().ok() == Some(d))
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            let base = ColumnMap::default();
            columns.insert(
                d.key().to_owned(),
                ColumnMap {
                    text: pick(&flags.col_text, &file.text).unwrap_or(base.text),
                    rating: pick(&flags.col_rating, &file.rating).unwrap_or(base.rating),
                    id: pick(&flags.col_id, &file.id),
                    fold: pick(&flags.col_fold, &file.fold),
                },
            );
        }
        for key in overlay.columns.keys() {
            key.parse::<Dataset>()?;
        }

        Ok(RunConfig {
            command: command.to_owned(),
            seed,
            threads,
            stopwords: pick(&flags.stopwords, &overlay.stopwords),
            tfidf_mode,
            ngrams,
            vocab_size,
            min_count: pick(&flags.min_count, &overlay.min_count).unwrap_or(DEFAULT_MIN_COUNT),
            embeddings: pick(&flags.embeddings, &overlay.embeddings),
            embedding_dim,
            format,
            train,
            columns,
        })
    }

    pub fn columns_for(&self, dataset: Dataset) -> ColumnMap {
        self.columns.get(dataset.key()).cloned().unwrap_or_default()
    }
}
