//! Descriptive corpus statistics and vocabulary overlap.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Polarity};
use crate::error::{Error, Result};
use crate::partition::SplitName;
use crate::vocab::{count_ngrams, vocab_overlap, NgramRange, Vocabulary, DEFAULT_MIN_COUNT};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSizes {
    pub unigrams: usize,
    pub unigrams_unfiltered: usize,
    pub up_to_bigrams: usize,
    pub up_to_bigrams_unfiltered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub name: String,
    pub n_reviews: usize,
    /// Sample counts per split; absent when some review has no fold.
    pub polarity_splits: Option<SplitCounts>,
    pub rating_splits: Option<SplitCounts>,
    pub mean_len: f64,
    pub median_len: f64,
    pub vocab: VocabSizes,
    pub min_count: u64,
    /// Percent of reviews with 1..=5 stars.
    pub rating_pct: [f64; 5],
    /// Percent of polarity-labelled reviews that are negative / positive.
    pub polarity_pct: [f64; 2],
}

fn median(sorted: &[usize]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Document length, vocabulary size and label distribution of a tokenized corpus.
pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let reviews = corpus.reviews();
    let docs: Vec<&[String]> = reviews.iter().map(|r| r.tokens()).collect();

    let mut lengths: Vec<usize> = docs.iter().map(|d| d.len()).collect();
    lengths.sort_unstable();
    let mean_len = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    };

    let uni = count_ngrams(&docs, NgramRange::UNIGRAMS);
    let bi = count_ngrams(&docs, NgramRange::UP_TO_BIGRAMS);
    let vocab = VocabSizes {
        unigrams: uni.len_above(DEFAULT_MIN_COUNT),
        unigrams_unfiltered: uni.len(),
        up_to_bigrams: bi.len_above(DEFAULT_MIN_COUNT),
        up_to_bigrams_unfiltered: bi.len(),
    };

    let all_folded = reviews.iter().all(|r| r.fold.is_some());
    let split_counts = |polarity_only: bool| {
        all_folded.then(|| {
            let mut c = SplitCounts::default();
            for r in reviews.iter().filter(|r| !polarity_only || r.polarity.is_some()) {
                match SplitName::of(r.fold.expect("checked")) {
                    SplitName::Train => c.train += 1,
                    SplitName::Validation => c.validation += 1,
                    SplitName::Test => c.test += 1,
                }
            }
            c
        })
    };

    let mut rating_counts = [0usize; 5];
    let mut polarity_counts = [0usize; 2];
    for r in reviews {
        rating_counts[usize::from(r.rating.stars() - 1)] += 1;
        match r.polarity {
            Some(Polarity::Negative) => polarity_counts[0] += 1,
            Some(Polarity::Positive) => polarity_counts[1] += 1,
            None => {}
        }
    }
    let labelled = polarity_counts[0] + polarity_counts[1];

    CorpusStats {
        name: corpus.name.clone(),
        n_reviews: reviews.len(),
        polarity_splits: split_counts(true),
        rating_splits: split_counts(false),
        mean_len,
        median_len: median(&lengths),
        vocab,
        min_count: DEFAULT_MIN_COUNT,
        rating_pct: rating_counts.map(|c| pct(c, reviews.len())),
        polarity_pct: polarity_counts.map(|c| pct(c, labelled)),
    }
}

/// Pairwise vocabulary overlap. `cells[r][c]` is the percentage of column
/// `c`'s vocabulary contained in row `r`'s; averages skip the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub row_avg: Vec<f64>,
    pub col_avg: Vec<f64>,
}

pub fn overlap_matrix(vocabularies: &[(String, Vocabulary)]) -> Result<OverlapMatrix> {
    let k = vocabularies.len();
    if k < 2 {
        return Err(Error::Domain("overlap matrix needs at least two vocabularies".into()));
    }
    let mut cells = vec![vec![0.0; k]; k];
    for r in 0..k {
        for c in 0..k {
            cells[r][c] = if r == c {
                100.0
            } else {
                vocab_overlap(&vocabularies[c].1, &vocabularies[r].1)?
            };
        }
    }
    let off_diag_mean = |vals: Vec<f64>| vals.iter().sum::<f64>() / vals.len() as f64;
    let row_avg = (0..k)
        .map(|r| off_diag_mean((0..k).filter(|&c| c != r).map(|c| cells[r][c]).collect()))
        .collect();
    let col_avg = (0..k)
        .map(|c| off_diag_mean((0..k).filter(|&r| r != c).map(|r| cells[r][c]).collect()))
        .collect();
    Ok(OverlapMatrix {
        labels: vocabularies.iter().map(|(l, _)| l.clone()).collect(),
        cells,
        row_avg,
        col_avg,
    })
}
