//! ROC-AUC, descriptive statistics, vocabulary sweeps and cross-dataset
//! evaluation.

pub mod auc;
pub mod pipeline;
pub mod render;
pub mod stats;

pub use auc::{roc_auc, roc_auc_for};
pub use pipeline::{
    cross_eval, fit_embedding_classifier, fit_tfidf_classifier, labelled, sweep_vocab_sizes, Classifier,
    CrossEvalConfig, CrossEvalMatrix, EvalReport, SweepPoint, TfidfConfig, ALL_COLUMN, ALL_COMBINED,
};
pub use stats::{corpus_stats, overlap_matrix, CorpusStats, OverlapMatrix};
