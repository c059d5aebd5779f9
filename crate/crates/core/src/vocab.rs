//! N-gram counting and vocabulary construction.
//!
//! N-grams are windows of consecutive tokens joined by a single space. A
//! vocabulary keeps the n-grams whose corpus frequency exceeds `min_count`,
//! ranked by frequency (ties lexicographic) and truncated to `max_size`.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Largest vocabulary ever built.
pub const MAX_VOCAB_SIZE: usize = 500_000;
pub const DEFAULT_MIN_COUNT: u64 = 5;

/// Inclusive n-gram length range with `1 <= lo <= hi <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NgramRange {
    lo: usize,
    hi: usize,
}

impl NgramRange {
    pub const UNIGRAMS: NgramRange = NgramRange { lo: 1, hi: 1 };
    pub const UP_TO_BIGRAMS: NgramRange = NgramRange { lo: 1, hi: 2 };
    pub const UP_TO_TRIGRAMS: NgramRange = NgramRange { lo: 1, hi: 3 };

    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if !(1 <= lo && lo <= hi && hi <= 3) {
            return Err(Error::Config(format!(
                "n-gram range must satisfy 1 <= lo <= hi <= 3, got {lo}..{hi}"
            )));
        }
        Ok(NgramRange { lo, hi })
    }

    pub fn lo(self) -> usize {
        self.lo
    }

    pub fn hi(self) -> usize {
        self.hi
    }
}

impl fmt::Display for NgramRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for NgramRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid n-gram range `{s}` (expected lo..hi)"));
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (lo, hi),
            None => (s, s),
        };
        NgramRange::new(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// Call `f` with every n-gram window of `tokens` within `range`, shorter
/// windows first at each position.
pub fn for_each_ngram(tokens: &[String], range: NgramRange, mut f: impl FnMut(&str)) {
    let mut buf = String::new();
    for start in 0..tokens.len() {
        buf.clear();
        for n in 1..=range.hi {
            let end = start + n;
            if end > tokens.len() {
                break;
            }
            if n > 1 {
                buf.push(' ');
            }
            buf.push_str(&tokens[end - 1]);
            if n >= range.lo {
                f(&buf);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramCount {
    pub tf_total: u64,
    pub df: u64,
}

/// Raw n-gram statistics over a set of documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    pub counts: HashMap<String, NgramCount>,
    pub n_documents: u64,
    pub range: NgramRange,
}

impl NgramCounts {
    pub fn empty(range: NgramRange) -> Self {
        NgramCounts {
            counts: HashMap::new(),
            n_documents: 0,
            range,
        }
    }

    fn add_document(&mut self, tokens: &[String], scratch: &mut Vec<String>) {
        scratch.clear();
        for_each_ngram(tokens, self.range, |g| scratch.push(g.to_owned()));
        scratch.sort_unstable();
        let mut i = 0;
        while i < scratch.len() {
            let mut j = i + 1;
            while j < scratch.len() && scratch[j] == scratch[i] {
                j += 1;
            }
            let occurrences = (j - i) as u64;
            let key = std::mem::take(&mut scratch[i]);
            let c = self.counts.entry(key).or_default();
            c.tf_total += occurrences;
            c.df += 1;
            i = j;
        }
        self.n_documents += 1;
    }

    /// Pointwise sum. Both sides must use the same range.
    pub fn merge(mut self, other: NgramCounts) -> NgramCounts {
        debug_assert_eq!(self.range, other.range);
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (std::mem::take(&mut self.counts), other.counts)
        } else {
            (other.counts, std::mem::take(&mut self.counts))
        };
        for (k, v) in small {
            let c = big.entry(k).or_default();
            c.tf_total += v.tf_total;
            c.df += v.df;
        }
        NgramCounts {
            counts: big,
            n_documents: self.n_documents + other.n_documents,
            range: self.range,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Number of distinct n-grams with `tf_total > min_count`.
    pub fn len_above(&self, min_count: u64) -> usize {
        self.counts.values().filter(|c| c.tf_total > min_count).count()
    }
}

const COUNT_SHARD: usize = 4096;

/// Count term and document frequencies of every n-gram in `docs`.
pub fn count_ngrams<D>(docs: &[D], range: NgramRange) -> NgramCounts
where
    D: AsRef<[String]> + Sync,
{
    docs.par_chunks(COUNT_SHARD)
        .map(|chunk| {
            let mut counts = NgramCounts::empty(range);
            let mut scratch = Vec::new();
            for d in chunk {
                counts.add_document(d.as_ref(), &mut scratch);
            }
            counts
        })
        .reduce(|| NgramCounts::empty(range), NgramCounts::merge)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub ngram: String,
    pub index: usize,
    pub df: u64,
    pub tf_total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    lookup: HashMap<String, usize>,
    pub n_documents: u64,
    pub ngram_range: NgramRange,
    pub min_count: u64,
    pub max_size: usize,
}

fn ranks_before(a: &VocabEntry, b: &VocabEntry) -> std::cmp::Ordering {
    b.tf_total.cmp(&a.tf_total).then_with(|| a.ngram.cmp(&b.ngram))
}

/// Keep n-grams with `tf_total > min_count`, rank by `(tf_total desc, ngram asc)`
/// and truncate to `max_size`.
pub fn build_vocabulary(counts: &NgramCounts, min_count: u64, max_size: usize) -> Result<Vocabulary> {
    if max_size == 0 {
        return Err(Error::Config("vocabulary max_size must be at least 1".into()));
    }
    let mut entries: Vec<VocabEntry> = counts
        .counts
        .iter()
        .filter(|(_, c)| c.tf_total > min_count)
        .map(|(g, c)| VocabEntry {
            ngram: g.clone(),
            index: 0,
            df: c.df,
            tf_total: c.tf_total,
        })
        .collect();
    if entries.len() > max_size {
        entries.select_nth_unstable_by(max_size - 1, ranks_before);
        entries.truncate(max_size);
    }
    entries.par_sort_unstable_by(ranks_before);
    for (i, e) in entries.iter_mut().enumerate() {
        e.index = i;
    }
    if entries.is_empty() {
        log::warn!("vocabulary is empty: no n-gram occurs more than {min_count} times");
    }
    Ok(Vocabulary::from_parts(
        entries,
        counts.n_documents,
        counts.range,
        min_count,
        max_size,
    ))
}

impl Vocabulary {
    fn from_parts(
        entries: Vec<VocabEntry>,
        n_documents: u64,
        ngram_range: NgramRange,
        min_count: u64,
        max_size: usize,
    ) -> Self {
        let lookup = entries.iter().map(|e| (e.ngram.clone(), e.index)).collect();
        Vocabulary {
            entries,
            lookup,
            n_documents,
            ngram_range,
            min_count,
            max_size,
        }
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.lookup.get(ngram).copied()
    }

    pub fn contains(&self, ngram: &str) -> bool {
        self.lookup.contains_key(ngram)
    }

    pub fn ngrams(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.ngram.as_str())
    }

    fn header(&self) -> String {
        format!(
            "# n_documents={} ngram_range={} min_count={} max_size={}",
            self.n_documents, self.ngram_range, self.min_count, self.max_size
        )
    }

    pub fn write_tsv_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}\t{}", e.ngram, e.index, e.df, e.tf_total)?;
        }
        Ok(())
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_atomic(path, |w| self.write_tsv_to(w))
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv_from(std::io::BufReader::new(file))
    }

    /// Parse the TSV form and check every vocabulary invariant.
    pub fn read_tsv_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty vocabulary file".into(),
        })?;
        let bad_header = |m: &str| Error::Parse {
            line: 1,
            message: format!("vocabulary header: {m}"),
        };
        let body = header.strip_prefix('#').ok_or_else(|| bad_header("missing `#`"))?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for kv in body.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad_header(kv))?;
            fields.insert(k, v);
        }
        let field = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| bad_header(&format!("missing `{k}`")))
        };
        let n_documents: u64 = field("n_documents")?.parse().map_err(|_| bad_header("n_documents"))?;
        let ngram_range: NgramRange = field("ngram_range")?.parse().map_err(|_| bad_header("ngram_range"))?;
        let min_count: u64 = field("min_count")?.parse().map_err(|_| bad_header("min_count"))?;
        let max_size: usize = field("max_size")?.parse().map_err(|_| bad_header("max_size"))?;
        if max_size == 0 {
            return Err(bad_header("max_size must be >= 1"));
        }

        let mut entries: Vec<VocabEntry> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            let bad = |m: String| Error::Parse {
                line: line_no,
                message: m,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [ngram, index, df, tf_total] = cols[..] else {
                return Err(bad(format!("expected 4 tab-separated fields, got {}", cols.len())));
            };
            let n_tokens = ngram.split(' ').count();
            if ngram.split(' ').any(str::is_empty) || !(ngram_range.lo..=ngram_range.hi).contains(&n_tokens) {
                return Err(bad(format!("malformed n-gram `{ngram}`")));
            }
            let entry = VocabEntry {
                ngram: ngram.to_owned(),
                index: index.parse().map_err(|_| bad(format!("invalid index `{index}`")))?,
                df: df.parse().map_err(|_| bad(format!("invalid df `{df}`")))?,
                tf_total: tf_total
                    .parse()
                    .map_err(|_| bad(format!("invalid tf_total `{tf_total}`")))?,
            };
            if entry.index != entries.len() {
                return Err(bad(format!("index {} out of sequence", entry.index)));
            }
            if entry.df < 1 || entry.df > n_documents || entry.df > entry.tf_total {
                return Err(bad(format!(
                    "df {} outside 1..={}",
                    entry.df,
                    n_documents.min(entry.tf_total)
                )));
            }
            if entry.tf_total <= min_count {
                return Err(bad(format!(
                    "tf_total {} not above min_count {min_count}",
                    entry.tf_total
                )));
            }
            if let Some(prev) = entries.last() {
                if ranks_before(prev, &entry) != std::cmp::Ordering::Less {
                    return Err(bad("entries not sorted by (tf_total desc, ngram asc)".into()));
                }
            }
            if !seen.insert(entry.ngram.clone()) {
                return Err(bad(format!("duplicate n-gram `{ngram}`")));
            }
            entries.push(entry);
        }
        if entries.len() > max_size {
            return Err(Error::Schema(format!(
                "{} entries exceed max_size {max_size}",
                entries.len()
            )));
        }
        Ok(Vocabulary::from_parts(
            entries,
            n_documents,
            ngram_range,
            min_count,
            max_size,
        ))
    }
}

/// Percentage of `a`'s n-grams that also belong to `b`.
pub fn vocab_overlap(a: &Vocabulary, b: &Vocabulary) -> Result<f64> {
    if a.ngram_range != b.ngram_range {
        return Err(Error::Domain(format!(
            "vocabularies use different n-gram ranges ({} vs {})",
            a.ngram_range, b.ngram_range
        )));
    }
    if a.is_empty() {
        return Err(Error::Domain("overlap is undefined for an empty vocabulary".into()));
    }
    let shared = a.ngrams().filter(|g| b.contains(g)).count();
    Ok(100.0 * shared as f64 / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn counts_of(entries: &[(&str, u64, u64)], n: u64) -> NgramCounts {
        NgramCounts {
            counts: entries
                .iter()
                .map(|&(g, tf, df)| (g.to_string(), NgramCount { tf_total: tf, df }))
                .collect(),
            n_documents: n,
            range: NgramRange::UNIGRAMS,
        }
    }

    #[test]
    fn windows() {
        let c = count_ngrams(&[doc(&["bom", "bom"])], NgramRange::new(1, 2).unwrap());
        assert_eq!(c.counts.len(), 2);
        assert_eq!(c.counts["bom"], NgramCount { tf_total: 2, df: 1 });
        assert_eq!(c.counts["bom bom"], NgramCount { tf_total: 1, df: 1 });

        let c = count_ngrams(&[doc(&["so"])], NgramRange::new(2, 3).unwrap());
        assert!(c.is_empty());
        assert_eq!(c.n_documents, 1);

        let c = count_ngrams(&[doc(&["otimo"]), doc(&["otimo", "sim"])], NgramRange::UNIGRAMS);
        assert_eq!(c.counts["otimo"], NgramCount { tf_total: 2, df: 2 });
    }

    #[test]
    fn trigram_windows() {
        let mut seen = Vec::new();
        for_each_ngram(&doc(&["a", "b", "c"]), NgramRange::new(2, 3).unwrap(), |g| {
            seen.push(g.to_string())
        });
        assert_eq!(seen, ["a b", "a b c", "b c"]);
    }

    #[test]
    fn lexicographic_tie_break() {
        let counts = counts_of(&[("a1", 10, 3), ("a2", 10, 3), ("b", 3, 1)], 4);
        let v = build_vocabulary(&counts, 5, 1).unwrap();
        assert_eq!(v.ngrams().collect::<Vec<_>>(), ["a1"]);
        let v = build_vocabulary(&counts, 5, 10).unwrap();
        assert_eq!(v.ngrams().collect::<Vec<_>>(), ["a1", "a2"]);
        assert_eq!(v.index_of("a2"), Some(1));
    }

    #[test]
    fn strictly_more_than_min_count() {
        let counts = counts_of(&[("x", 5, 1), ("y", 6, 1)], 2);
        let v = build_vocabulary(&counts, 5, 10).unwrap();
        assert_eq!(v.ngrams().collect::<Vec<_>>(), ["y"]);
        let counts = counts_of(&[("x", 5, 1), ("z", 1, 1)], 2);
        assert!(build_vocabulary(&counts, 5, 10).unwrap().is_empty());
    }

    #[test]
    fn caps_at_max_size() {
        let entries: Vec<(String, u64)> = (0..2000).map(|i| (format!("g{i:05}"), 6 + (i % 97) as u64)).collect();
        let counts = NgramCounts {
            counts: entries
                .iter()
                .map(|(g, tf)| (g.clone(), NgramCount { tf_total: *tf, df: 1 }))
                .collect(),
            n_documents: 10,
            range: NgramRange::UNIGRAMS,
        };
        let small = build_vocabulary(&counts, 5, 500).unwrap();
        let big = build_vocabulary(&counts, 5, 1500).unwrap();
        assert_eq!(small.len(), 500);
        assert_eq!(small.entries(), &big.entries()[..500]);
    }

    #[test]
    fn overlap() {
        let a = build_vocabulary(&counts_of(&[("x", 9, 1), ("y", 9, 1)], 2), 5, 10).unwrap();
        let b = build_vocabulary(
            &counts_of(&[("x", 9, 1), ("z", 9, 1), ("w", 9, 1), ("q", 9, 1)], 2),
            5,
            10,
        )
        .unwrap();
        let c = build_vocabulary(&counts_of(&[("k", 9, 1)], 2), 5, 10).unwrap();
        assert_eq!(vocab_overlap(&a, &a).unwrap(), 100.0);
        assert_eq!(vocab_overlap(&a, &b).unwrap(), 50.0);
        assert_eq!(vocab_overlap(&b, &a).unwrap(), 25.0);
        assert_eq!(vocab_overlap(&a, &c).unwrap(), 0.0);
        let empty = build_vocabulary(&counts_of(&[], 2), 5, 10).unwrap();
        assert!(vocab_overlap(&empty, &a).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let docs: Vec<Vec<String>> = (0..20)
            .map(|i| doc(&["bom", "produto", if i % 2 == 0 { "sim" } else { "nao" }]))
            .collect();
        let v = build_vocabulary(&count_ngrams(&docs, NgramRange::UP_TO_TRIGRAMS), 5, 100).unwrap();
        let mut buf = Vec::new();
        v.write_tsv_to(&mut buf).unwrap();
        let back = Vocabulary::read_tsv_from(buf.as_slice()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn tsv_rejects_broken_invariants() {
        let header = "# n_documents=10 ngram_range=1..1 min_count=5 max_size=10\n";
        for body in [
            "a\t0\t1\t5\n",
            "a\t1\t1\t6\n",
            "a\t0\t11\t20\n",
            "a\t0\t1\t6\nb\t1\t1\t7\n",
            "a b\t0\t1\t6\n",
            "a\t0\t1\n",
        ] {
            let text = format!("{header}{body}");
            assert!(Vocabulary::read_tsv_from(text.as_bytes()).is_err(), "{body:?}");
        }
        assert!(Vocabulary::read_tsv_from("n_documents=1\n".as_bytes()).is_err());
    }

    #[test]
    fn range_parsing() {
        assert_eq!("1..3".parse::<NgramRange>().unwrap(), NgramRange::UP_TO_TRIGRAMS);
        assert_eq!("2".parse::<NgramRange>().unwrap(), NgramRange::new(2, 2).unwrap());
        assert!("0..2".parse::<NgramRange>().is_err());
        assert!("3..1".parse::<NgramRange>().is_err());
        assert!("1..4".parse::<NgramRange>().is_err());
    }
}
