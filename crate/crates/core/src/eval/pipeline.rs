//! Fit-and-evaluate workflows: single models, the vocabulary-size sweep and
//! the cross-dataset matrix.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Review;
use crate::error::{Error, Result};
use crate::eval::auc::roc_auc_for;
use crate::model::{predict_score, train, LinearModel, TrainConfig, TrainSummary};
use crate::partition::{SplitName, Splits};
use crate::vectorize::{fit_tfidf, EmbeddingFeatures, EmbeddingTable, TfidfMode, TfidfModel, Vectorizer};
use crate::vocab::{build_vocabulary, count_ngrams, NgramCounts, NgramRange, DEFAULT_MIN_COUNT, MAX_VOCAB_SIZE};

/// Label used for the model trained on every dataset at once.
pub const ALL_COMBINED: &str = "All combined";
/// Label of the evaluation column built from every test split.
pub const ALL_COLUMN: &str = "All";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub split: SplitName,
    /// ROC-AUC in percent.
    pub roc_auc: f64,
    pub n_samples: usize,
    pub model_descriptor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfConfig {
    pub mode: TfidfMode,
    pub ngram_range: NgramRange,
    pub vocab_size: usize,
    pub min_count: u64,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            mode: TfidfMode::SmoothedL2,
            ngram_range: NgramRange::UP_TO_TRIGRAMS,
            vocab_size: MAX_VOCAB_SIZE,
            min_count: DEFAULT_MIN_COUNT,
        }
    }
}

/// Token lists and boolean labels of the polarity-labelled reviews.
pub fn labelled<'a>(reviews: impl IntoIterator<Item = &'a Review>) -> (Vec<&'a [String]>, Vec<bool>) {
    reviews
        .into_iter()
        .filter_map(|r| r.polarity.map(|p| (r.tokens(), p.is_positive())))
        .unzip()
}

/// A featurizer together with the linear model trained on its output.
#[derive(Debug, Clone)]
pub struct Classifier<Z> {
    pub vectorizer: Z,
    pub model: LinearModel,
    pub summary: TrainSummary,
}

fn fit_with<Z: Vectorizer>(
    vectorizer: Z,
    docs: &[&[String]],
    labels: &[bool],
    config: &TrainConfig,
) -> Result<Classifier<Z>> {
    let vectors: Vec<Z::Output> = docs.par_iter().map(|d| vectorizer.transform(d)).collect();
    let (model, summary) = train(&vectors, labels, config, vectorizer.feature_space())?;
    log::info!(
        "trained on {} documents: {} epochs, loss {:.6}, stop {:?}",
        labels.len(),
        summary.epochs,
        summary.final_loss,
        summary.stop
    );
    Ok(Classifier {
        vectorizer,
        model,
        summary,
    })
}

fn fit_tfidf_from_counts(
    counts: &NgramCounts,
    docs: &[&[String]],
    labels: &[bool],
    tfidf: &TfidfConfig,
    config: &TrainConfig,
) -> Result<Classifier<TfidfModel>> {
    let vocabulary = build_vocabulary(counts, tfidf.min_count, tfidf.vocab_size)?;
    fit_with(fit_tfidf(vocabulary, tfidf.mode)?, docs, labels, config)
}

/// Build the vocabulary on `dev`, fit tf-idf and train the logistic model.
pub fn fit_tfidf_classifier(
    dev: &[&Review],
    tfidf: &TfidfConfig,
    config: &TrainConfig,
) -> Result<Classifier<TfidfModel>> {
    let (docs, labels) = labelled(dev.iter().copied());
    let counts = count_ngrams(&docs, tfidf.ngram_range);
    fit_tfidf_from_counts(&counts, &docs, &labels, tfidf, config)
}

/// Averaged-embedding features over words seen more than `min_count` times in `dev`.
pub fn fit_embedding_classifier(
    dev: &[&Review],
    table: Arc<EmbeddingTable>,
    min_count: u64,
    config: &TrainConfig,
) -> Result<Classifier<EmbeddingFeatures>> {
    let (docs, labels) = labelled(dev.iter().copied());
    let eligible = build_vocabulary(&count_ngrams(&docs, NgramRange::UNIGRAMS), min_count, usize::MAX)?;
    fit_with(EmbeddingFeatures::new(table, &eligible), &docs, &labels, config)
}

impl<Z: Vectorizer> Classifier<Z> {
    pub fn scores(&self, docs: &[&[String]]) -> Result<Vec<f64>> {
        docs.par_iter()
            .map(|d| predict_score(&self.model, &self.vectorizer.transform(d)))
            .collect()
    }

    /// ROC-AUC on the polarity-labelled reviews of one split.
    pub fn evaluate(&self, dataset: &str, split: SplitName, reviews: &[&Review]) -> Result<EvalReport> {
        let (docs, labels) = labelled(reviews.iter().copied());
        let scores = self.scores(&docs)?;
        let auc = roc_auc_for(&format!("{dataset}/{split:?}").to_lowercase(), &scores, &labels)?;
        Ok(EvalReport {
            dataset: dataset.to_owned(),
            split,
            roc_auc: 100.0 * auc,
            n_samples: labels.len(),
            model_descriptor: self.model.feature_space.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub requested: usize,
    pub vocab_size: usize,
    pub report: EvalReport,
}

/// Train and test one tf-idf model per vocabulary size. Sizes above the
/// number of available n-grams are clamped.
pub fn sweep_vocab_sizes(
    dataset: &str,
    splits: &Splits,
    sizes: &[usize],
    tfidf: &TfidfConfig,
    config: &TrainConfig,
) -> Result<Vec<SweepPoint>> {
    if sizes.is_empty() {
        return Err(Error::Config("vocabulary sweep needs at least one size".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "sweep sizes must be strictly ascending: {sizes:?}"
        )));
    }
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > MAX_VOCAB_SIZE) {
        return Err(Error::Config(format!("sweep size {bad} outside 1..={MAX_VOCAB_SIZE}")));
    }
    let dev = splits.development();
    let (docs, labels) = labelled(dev.iter().copied());
    let counts = count_ngrams(&docs, tfidf.ngram_range);
    let available = counts.len_above(tfidf.min_count);
    let test: Vec<&Review> = splits.test.reviews().iter().collect();

    let mut points = Vec::with_capacity(sizes.len());
    for &requested in sizes {
        if requested > available {
            log::warn!("{dataset}: vocabulary size {requested} exceeds the {available} available n-grams; clamping");
        }
        let cfg = TfidfConfig {
            vocab_size: requested.min(available).max(1),
            ..tfidf.clone()
        };
        let clf = fit_tfidf_from_counts(&counts, &docs, &labels, &cfg, config)?;
        let report = clf.evaluate(dataset, SplitName::Test, &test)?;
        points.push(SweepPoint {
            requested,
            vocab_size: clf.vectorizer.dims(),
            report,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalConfig {
    pub tfidf: TfidfConfig,
    pub train: TrainConfig,
    /// Append a column scored on the concatenation of every test split.
    pub include_all_column: bool,
}

/// Test ROC-AUC (percent) of every training set against every evaluation set.
///
/// Row `i < k` is the model trained on dataset `i`; when there are at least
/// two datasets the last row is the model trained on all of them. Column
/// `j < k` is dataset `j`'s test split. `delta[j] = cells[combined][j] - cells[j][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalMatrix {
    pub train_labels: Vec<String>,
    pub eval_labels: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub combined_row: usize,
    pub n_test: Vec<usize>,
}

impl CrossEvalMatrix {
    pub fn n_datasets(&self) -> usize {
        self.delta.len()
    }

    /// Delta row recomputed from the grid.
    pub fn recompute_delta(&self) -> Vec<f64> {
        (0..self.n_datasets())
            .map(|j| self.cells[self.combined_row][j] - self.cells[j][j])
            .collect()
    }

    pub fn cell(&self, train: &str, eval: &str) -> Option<f64> {
        let r = self.train_labels.iter().position(|l| l == train)?;
        let c = self.eval_labels.iter().position(|l| l == eval)?;
        Some(self.cells[r][c])
    }
}

pub fn cross_eval(datasets: &[(String, Splits)], config: &CrossEvalConfig) -> Result<CrossEvalMatrix> {
    if datasets.is_empty() {
        return Err(Error::Config("cross evaluation needs at least one dataset".into()));
    }
    let k = datasets.len();

    let mut eval_sets: Vec<(String, Vec<&Review>)> = datasets
        .iter()
        .map(|(name, s)| (name.clone(), s.test.reviews().iter().collect()))
        .collect();
    if config.include_all_column {
        let all = datasets.iter().flat_map(|(_, s)| s.test.reviews()).collect();
        eval_sets.push((ALL_COLUMN.to_owned(), all));
    }

    let mut train_sets: Vec<(String, Vec<&Review>)> = datasets
        .iter()
        .map(|(name, s)| (name.clone(), s.development()))
        .collect();
    if k >= 2 {
        let all = datasets.iter().flat_map(|(_, s)| s.development()).collect();
        train_sets.push((ALL_COMBINED.to_owned(), all));
    }

    let mut cells = Vec::with_capacity(train_sets.len());
    for (name, dev) in &train_sets {
        log::info!("cross-eval: training on {name} ({} reviews)", dev.len());
        let clf = fit_tfidf_classifier(dev, &config.tfidf, &config.train)?;
        let row = eval_sets
            .iter()
            .map(|(eval_name, reviews)| clf.evaluate(eval_name, SplitName::Test, reviews).map(|r| r.roc_auc))
            .collect::<Result<Vec<f64>>>()?;
        cells.push(row);
    }

    let combined_row = cells.len() - 1;
    let delta = (0..k).map(|j| cells[combined_row][j] - cells[j][j]).collect();
    let m = CrossEvalMatrix {
        train_labels: train_sets.into_iter().map(|(n, _)| n).collect(),
        eval_labels: eval_sets.iter().map(|(n, _)| n.clone()).collect(),
        n_test: eval_sets
            .iter()
            .map(|(_, r)| r.iter().filter(|r| r.polarity.is_some()).count())
            .collect(),
        cells,
        delta,
        combined_row,
    };
    Ok(m)
}
