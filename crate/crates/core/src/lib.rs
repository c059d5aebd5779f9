//! Sentiment classification benchmark for Brazilian Portuguese user reviews.
//!
//! The pipeline: ingest raw review exports into one consolidated corpus
//! ([`corpus`]), normalize and tokenize the text ([`textprep`]), assign
//! stratified folds ([`partition`]), build n-gram vocabularies ([`vocab`]),
//! turn documents into tf-idf or averaged-embedding vectors ([`vectorize`]),
//! train logistic regression ([`model`]) and report ROC-AUC, corpus
//! statistics and cross-dataset matrices ([`eval`]). [`cli`] wires it into
//! the `sentibench` command.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod partition;
pub mod textprep;
pub mod util;
pub mod vectorize;
pub mod vocab;

pub use error::{Error, Result};
