//! Document representations: tf-idf sparse vectors and averaged word
//! embeddings.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textprep::normalize_text;
use crate::vocab::{for_each_ngram, Vocabulary};

/// Operations the linear model needs from a document vector.
pub trait FeatureVector {
    fn dims(&self) -> usize;
    /// `w · x`; `weights.len()` must equal `dims()`.
    fn dot(&self, weights: &[f64]) -> f64;
    /// `out += alpha * x`.
    fn add_scaled_to(&self, alpha: f64, out: &mut [f64]);
    fn is_finite(&self) -> bool;
}

/// Sparse vector with strictly increasing indices and non-zero weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dims: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dims: usize) -> Self {
        SparseVector {
            dims,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from `(index, weight)` pairs; zero weights are dropped.
    pub fn from_pairs(dims: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut v = SparseVector::zeros(dims);
        for (i, w) in pairs {
            if i >= dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: i + 1,
                });
            }
            if v.indices.last().is_some_and(|&last| last as usize >= i) {
                return Err(Error::Domain("sparse indices must be strictly increasing".into()));
            }
            if w != 0.0 {
                v.indices.push(i as u32);
                v.values.push(w);
            }
        }
        Ok(v)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.indices
            .binary_search(&(index as u32))
            .map(|p| self.values[p])
            .unwrap_or(0.0)
    }
}

impl FeatureVector for SparseVector {
    fn dims(&self) -> usize {
        self.dims
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.pairs().map(|(i, v)| weights[i] * v).sum()
    }

    fn add_scaled_to(&self, alpha: f64, out: &mut [f64]) {
        for (i, v) in self.pairs() {
            out[i] += alpha * v;
        }
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector {
    pub values: Vec<f64>,
}

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        DenseVector { values: vec![0.0; dim] }
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(values: Vec<f64>) -> Self {
        DenseVector { values }
    }
}

impl FeatureVector for DenseVector {
    fn dims(&self) -> usize {
        self.values.len()
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.values.iter().zip(weights).map(|(x, w)| x * w).sum()
    }

    fn add_scaled_to(&self, alpha: f64, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(&self.values) {
            *o += alpha * x;
        }
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Identifies the feature space a model was trained in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub kind: String,
    pub dims: usize,
    pub fingerprint: String,
}

impl fmt::Display for FeatureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let short = &self.fingerprint[..self.fingerprint.len().min(12)];
        write!(f, "{}[{}]#{}", self.kind, self.dims, short)
    }
}

/// Turns a token list into a feature vector.
pub trait Vectorizer: Sync {
    type Output: FeatureVector + Send + Sync;
    fn transform(&self, tokens: &[String]) -> Self::Output;
    fn feature_space(&self) -> FeatureSpace;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfidfMode {
    /// `w = tf * ln(N / df)`.
    RawEq1,
    /// `w = tf * (ln((1 + N) / (1 + df)) + 1)`, then scaled to unit L2 norm.
    SmoothedL2,
}

impl fmt::Display for TfidfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TfidfMode::RawEq1 => "raw",
            TfidfMode::SmoothedL2 => "smoothed",
        })
    }
}

impl FromStr for TfidfMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "raw_eq1" => Ok(TfidfMode::RawEq1),
            "smoothed" | "smoothed_l2" => Ok(TfidfMode::SmoothedL2),
            _ => Err(Error::Config(format!("unknown tf-idf mode `{s}` (raw|smoothed)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: Arc<Vocabulary>,
    idf: Vec<f64>,
    mode: TfidfMode,
}

/// Compute per-entry idf weights (natural logarithm).
pub fn fit_tfidf(vocabulary: impl Into<Arc<Vocabulary>>, mode: TfidfMode) -> Result<TfidfModel> {
    let vocabulary = vocabulary.into();
    if vocabulary.n_documents == 0 {
        return Err(Error::Domain("tf-idf needs at least one document".into()));
    }
    if vocabulary.is_empty() {
        return Err(Error::Domain("tf-idf needs a non-empty vocabulary".into()));
    }
    let n = vocabulary.n_documents as f64;
    let idf = vocabulary
        .entries()
        .iter()
        .map(|e| {
            let df = e.df as f64;
            match mode {
                TfidfMode::RawEq1 => (n / df).ln(),
                TfidfMode::SmoothedL2 => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
            }
        })
        .collect();
    Ok(TfidfModel { vocabulary, idf, mode })
}

impl TfidfModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn mode(&self) -> TfidfMode {
        self.mode
    }

    pub fn dims(&self) -> usize {
        self.idf.len()
    }
}

/// Weight every in-vocabulary n-gram of `tokens` by `tf * idf`.
pub fn transform_tfidf(model: &TfidfModel, tokens: &[String]) -> SparseVector {
    let mut hits: Vec<u32> = Vec::new();
    for_each_ngram(tokens, model.vocabulary.ngram_range, |g| {
        if let Some(i) = model.vocabulary.index_of(g) {
            hits.push(i as u32);
        }
    });
    hits.sort_unstable();
    let mut v = SparseVector::zeros(model.dims());
    let mut k = 0;
    while k < hits.len() {
        let idx = hits[k];
        let mut tf = 0u32;
        while k < hits.len() && hits[k] == idx {
            tf += 1;
            k += 1;
        }
        let w = f64::from(tf) * model.idf[idx as usize];
        if w != 0.0 {
            v.indices.push(idx);
            v.values.push(w);
        }
    }
    if model.mode == TfidfMode::SmoothedL2 {
        let norm = v.norm();
        if norm > 0.0 {
            for w in &mut v.values {
                *w /= norm;
            }
        }
    }
    v
}

impl Vectorizer for TfidfModel {
    type Output = SparseVector;

    fn transform(&self, tokens: &[String]) -> SparseVector {
        transform_tfidf(self, tokens)
    }

    fn feature_space(&self) -> FeatureSpace {
        let mut h = Sha256::new();
        h.update(format!(
            "tfidf;{};{};{};",
            self.mode, self.vocabulary.ngram_range, self.vocabulary.n_documents
        ));
        for e in self.vocabulary.entries() {
            h.update(e.ngram.as_bytes());
            h.update([0]);
            h.update(e.df.to_le_bytes());
        }
        FeatureSpace {
            kind: format!("tfidf-{}", self.mode),
            dims: self.dims(),
            fingerprint: hex::encode(h.finalize()),
        }
    }
}

/// Pretrained word vectors keyed by normalized word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    pub source_name: String,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Parse word2vec-style text: a `count dim` header, then `word v1 .. vdim`
    /// per line. Words are normalized and the first occurrence of a
    /// normalized form wins.
    pub fn from_reader<R: BufRead>(
        reader: R,
        expected_dim: Option<usize>,
        source_name: impl Into<String>,
    ) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty embedding file".into(),
        })?;
        let mut head = header.split_ascii_whitespace();
        let bad_header = || Error::Parse {
            line: 1,
            message: format!("expected `vocab_count dim` header, got `{header}`"),
        };
        let declared: usize = head.next().and_then(|v| v.parse().ok()).ok_or_else(bad_header)?;
        let dim: usize = head.next().and_then(|v| v.parse().ok()).ok_or_else(bad_header)?;
        if head.next().is_some() || dim == 0 {
            return Err(bad_header());
        }
        if let Some(expected) = expected_dim {
            if expected != dim {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("embedding dimension {dim} does not match expected {expected}"),
                });
            }
        }

        let mut table = EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            source_name: source_name.into(),
        };
        let mut rows = 0usize;
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            let mut parts = line.split_ascii_whitespace();
            let Some(word) = parts.next() else { continue };
            rows += 1;
            values.clear();
            for p in parts {
                let v: f32 = p.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("non-numeric value `{p}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-finite value `{p}`"),
                    });
                }
                values.push(v);
            }
            if values.len() != dim {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {dim} values, found {}", values.len()),
                });
            }
            let key = normalize_text(word);
            if key.is_empty() || table.index.contains_key(&key) {
                continue;
            }
            table.index.insert(key.clone(), table.words.len());
            table.words.push(key);
            table.data.extend_from_slice(&values);
        }
        if rows != declared {
            log::warn!("embedding header declares {declared} vectors but {rows} were read");
        }
        Ok(table)
    }

    fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{};{};", self.dim, self.words.len()));
        for (w, chunk) in self.words.iter().zip(self.data.chunks(self.dim)) {
            h.update(w.as_bytes());
            h.update([0]);
            for v in chunk {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    EmbeddingTable::from_reader(std::io::BufReader::with_capacity(1 << 20, file), expected_dim, name)
}

/// Mean of the table vectors of tokens that are both eligible and embedded
/// (with multiplicity); the zero vector when none qualify.
pub fn embed_document(table: &EmbeddingTable, tokens: &[String], eligible: &HashSet<String>) -> DenseVector {
    let mut sum = vec![0.0f64; table.dim];
    let mut n = 0usize;
    for t in tokens {
        if !eligible.contains(t) {
            continue;
        }
        if let Some(v) = table.get(t) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += f64::from(*x);
            }
            n += 1;
        }
    }
    if n > 0 {
        let n = n as f64;
        for s in &mut sum {
            *s /= n;
        }
    }
    DenseVector { values: sum }
}

/// Averaged-embedding featurizer bound to a table and a frozen eligible set.
#[derive(Debug, Clone)]
pub struct EmbeddingFeatures {
    table: Arc<EmbeddingTable>,
    eligible: HashSet<String>,
    fingerprint: String,
}

impl EmbeddingFeatures {
    /// `eligible` is typically the unigram vocabulary of the development split.
    pub fn new(table: Arc<EmbeddingTable>, eligible: &Vocabulary) -> Self {
        let eligible: HashSet<String> = eligible.ngrams().map(str::to_owned).collect();
        let mut sorted: Vec<&String> = eligible.iter().collect();
        sorted.sort();
        let mut h = Sha256::new();
        h.update(format!("embedding;{};{};", table.source_name, table.fingerprint()));
        for w in sorted {
            h.update(w.as_bytes());
            h.update([0]);
        }
        EmbeddingFeatures {
            table,
            eligible,
            fingerprint: hex::encode(h.finalize()),
        }
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn eligible(&self) -> &HashSet<String> {
        &self.eligible
    }
}

impl Vectorizer for EmbeddingFeatures {
    type Output = DenseVector;

    fn transform(&self, tokens: &[String]) -> DenseVector {
        embed_document(&self.table, tokens, &self.eligible)
    }

    fn feature_space(&self) -> FeatureSpace {
        FeatureSpace {
            kind: format!("embedding-{}", self.table.source_name),
            dims: self.table.dim,
            fingerprint: self.fingerprint.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{build_vocabulary, count_ngrams, NgramRange};

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    /// Vocabulary over `docs` with no frequency pruning.
    fn vocab(docs: &[Vec<String>]) -> Vocabulary {
        build_vocabulary(&count_ngrams(docs, NgramRange::UNIGRAMS), 0, 100).unwrap()
    }

    #[test]
    fn idf_values() {
        // N = 2; "bom" in one document, "sim" in both
        let v = vocab(&[toks(&["bom", "sim"]), toks(&["sim"])]);
        let raw = fit_tfidf(v.clone(), TfidfMode::RawEq1).unwrap();
        let smooth = fit_tfidf(v.clone(), TfidfMode::SmoothedL2).unwrap();
        let bom = v.index_of("bom").unwrap();
        let sim = v.index_of("sim").unwrap();
        assert!((raw.idf()[bom] - 2f64.ln()).abs() < 1e-12);
        assert_eq!(raw.idf()[sim], 0.0);
        assert!((smooth.idf()[sim] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_transform_matches_hand_computation() {
        let v = vocab(&[toks(&["bom"]), toks(&["ruim"])]);
        let m = fit_tfidf(v, TfidfMode::RawEq1).unwrap();
        let x = transform_tfidf(&m, &toks(&["bom", "bom"]));
        assert_eq!(x.nnz(), 1);
        assert!((x.get(m.vocabulary().index_of("bom").unwrap()) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(transform_tfidf(&m, &toks(&["xyz"])).nnz(), 0);
    }

    #[test]
    fn smoothed_vectors_have_unit_norm() {
        let v = vocab(&[toks(&["bom", "sim"]), toks(&["ruim", "sim"]), toks(&["bom"])]);
        let m = fit_tfidf(v, TfidfMode::SmoothedL2).unwrap();
        let x = transform_tfidf(&m, &toks(&["bom", "sim", "sim", "ruim"]));
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert_eq!(transform_tfidf(&m, &[]).norm(), 0.0);
    }

    #[test]
    fn empty_vocabulary_is_rejected() {
        let v = build_vocabulary(&count_ngrams(&[toks(&["a"])], NgramRange::UNIGRAMS), 5, 10).unwrap();
        assert!(fit_tfidf(v, TfidfMode::RawEq1).is_err());
    }

    #[test]
    fn loads_embedding_text() {
        let t = EmbeddingTable::from_reader("2 3\nbom 1 2 3\nruim 0 0 1\n".as_bytes(), Some(3), "toy").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.get("ruim").unwrap(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn embedding_collision_keeps_first() {
        let t = EmbeddingTable::from_reader("2 2\nnão 1 1\nnao 2 2\n".as_bytes(), None, "toy").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("nao").unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn embedding_errors() {
        let err = EmbeddingTable::from_reader("2 3\nbom 1 2 3\nruim 0 1\n".as_bytes(), None, "toy").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = EmbeddingTable::from_reader("1 2\nbom 1 x\n".as_bytes(), None, "toy").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(EmbeddingTable::from_reader("1 2\nbom 1 2\n".as_bytes(), Some(3), "toy").is_err());
        // header count mismatch only warns
        assert!(EmbeddingTable::from_reader("5 2\nbom 1 2 \n".as_bytes(), None, "toy").is_ok());
        // a huge declared dimension is not trusted for allocation
        assert!(EmbeddingTable::from_reader("2 2777777777777".as_bytes(), None, "toy")
            .unwrap()
            .is_empty());
        assert!(EmbeddingTable::from_reader("1 2777777777777\nbom 1\n".as_bytes(), None, "toy").is_err());
    }

    #[test]
    fn document_average() {
        let t = EmbeddingTable::from_reader("2 3\nbom 1 2 3\nruim 0 0 1\n".as_bytes(), None, "toy").unwrap();
        let eligible: HashSet<String> = ["bom", "ruim"].iter().map(|s| s.to_string()).collect();
        let d = embed_document(&t, &toks(&["bom", "ruim"]), &eligible);
        assert_eq!(d.values, vec![0.5, 1.0, 2.0]);
        assert_eq!(embed_document(&t, &toks(&["xyz"]), &eligible).values, vec![0.0; 3]);
        assert_eq!(
            embed_document(&t, &toks(&["bom"]), &eligible).values,
            vec![1.0, 2.0, 3.0]
        );
        let only_bom: HashSet<String> = ["bom".to_string()].into();
        assert_eq!(
            embed_document(&t, &toks(&["bom", "ruim"]), &only_bom).values,
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn sparse_from_pairs_validates() {
        assert!(SparseVector::from_pairs(3, [(0, 1.0), (2, 0.5)]).is_ok());
        assert!(SparseVector::from_pairs(3, [(2, 1.0), (1, 0.5)]).is_err());
        assert!(SparseVector::from_pairs(3, [(3, 1.0)]).is_err());
        assert_eq!(SparseVector::from_pairs(3, [(1, 0.0)]).unwrap().nnz(), 0);
    }
}
