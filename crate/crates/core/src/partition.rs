//! Stratified 10-fold assignment and the train/validation/test convention
//! (folds 1-8 train, 9 validation, 10 test).
//!
//! Each (dataset, label) stratum is shuffled with Fisher-Yates driven by
//! xoshiro256++ (seeded through SplitMix64 from `seed ^ fnv1a64(stratum)`) and
//! dealt round-robin starting at fold `fnv1a64(stratum) % 10 + 1`. The
//! algorithms are fixed so that a seed always reproduces the same folds.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dataset, Fold, Review, NUM_FOLDS};
use crate::error::{Error, Result};
use crate::util::fnv1a64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyKey {
    Rating,
    /// Polarity strata; 3-star reviews fall back to their own rating stratum.
    Polarity,
}

impl StratifyKey {
    pub fn stratum(self, review: &Review) -> String {
        match (self, review.polarity) {
            (StratifyKey::Polarity, Some(p)) => format!("polarity{}", p.label()),
            _ => format!("rating{}", review.rating.stars()),
        }
    }
}

impl fmt::Display for StratifyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StratifyKey::Rating => "rating",
            StratifyKey::Polarity => "polarity",
        })
    }
}

impl FromStr for StratifyKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rating" => Ok(StratifyKey::Rating),
            "polarity" => Ok(StratifyKey::Polarity),
            _ => Err(Error::Config(format!("unknown stratify key `{s}` (rating|polarity)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    folds: BTreeMap<String, Fold>,
    pub seed: u64,
    pub stratify_key: StratifyKey,
}

/// Unbiased integer in `0..bound` (Lemire's multiply-and-reject).
fn bounded(rng: &mut Xoshiro256PlusPlus, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = u128::from(rng.next_u64()) * u128::from(bound);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

fn fisher_yates<T>(items: &mut [T], rng: &mut Xoshiro256PlusPlus) {
    for i in (1..items.len()).rev() {
        let j = bounded(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

fn stratum_key(dataset: Dataset, stratum: &str) -> String {
    format!("{}:{}", dataset.key(), stratum)
}

/// Assign every review of `corpus` to a fold in 1..=10.
pub fn assign_folds(corpus: &Corpus, seed: u64, stratify_key: StratifyKey) -> Result<FoldAssignment> {
    if corpus.is_empty() {
        return Err(Error::Domain("cannot partition an empty corpus".into()));
    }
    let mut groups: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for r in corpus.reviews() {
        groups
            .entry(stratum_key(r.dataset, &stratify_key.stratum(r)))
            .or_default()
            .push(r.id.as_str());
    }
    let mut folds = BTreeMap::new();
    for (key, mut members) in groups {
        let hash = fnv1a64(key.as_bytes());
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ hash);
        fisher_yates(&mut members, &mut rng);
        let start = hash % u64::from(NUM_FOLDS);
        for (k, id) in members.into_iter().enumerate() {
            let fold = ((start + k as u64) % u64::from(NUM_FOLDS)) as u8 + 1;
            folds.insert(id.to_owned(), Fold::new(fold)?);
        }
    }
    Ok(FoldAssignment {
        folds,
        seed,
        stratify_key,
    })
}

impl FoldAssignment {
    /// Take the folds already stored on the reviews (e.g. published partitions).
    pub fn from_corpus(corpus: &Corpus, stratify_key: StratifyKey) -> Result<Self> {
        let folds = corpus
            .reviews()
            .iter()
            .map(|r| {
                r.fold
                    .map(|f| (r.id.clone(), f))
                    .ok_or_else(|| Error::Precondition(format!("review `{}` has no fold", r.id)))
            })
            .collect::<Result<_>>()?;
        Ok(FoldAssignment {
            folds,
            seed: 0,
            stratify_key,
        })
    }

    pub fn get(&self, id: &str) -> Option<Fold> {
        self.folds.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    /// Write the folds onto the corpus reviews.
    pub fn apply(&self, corpus: &mut Corpus) -> Result<()> {
        for r in corpus.reviews_mut() {
            r.fold = Some(
                self.get(&r.id)
                    .ok_or_else(|| Error::Precondition(format!("review `{}` has no fold", r.id)))?,
            );
        }
        Ok(())
    }

    pub fn split(&self, corpus: &Corpus) -> Result<Splits> {
        split_with(corpus, |r| self.get(&r.id))
    }
}

/// The hold-out view of a partitioned corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
}

impl Splits {
    /// Training and validation concatenated, as used for model development.
    pub fn development(&self) -> Vec<&Review> {
        self.train.reviews().iter().chain(self.validation.reviews()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub fn of(fold: Fold) -> SplitName {
        match fold.index() {
            1..=8 => SplitName::Train,
            9 => SplitName::Validation,
            _ => SplitName::Test,
        }
    }
}

/// Split using the folds stored on each review.
pub fn split(corpus: &Corpus) -> Result<Splits> {
    split_with(corpus, |r| r.fold)
}

fn split_with(corpus: &Corpus, fold_of: impl Fn(&Review) -> Option<Fold>) -> Result<Splits> {
    let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for r in corpus.reviews() {
        let fold = fold_of(r).ok_or_else(|| Error::Precondition(format!("review `{}` has no fold", r.id)))?;
        let mut r = r.clone();
        r.fold = Some(fold);
        match SplitName::of(fold) {
            SplitName::Train => train.push(r),
            SplitName::Validation => validation.push(r),
            SplitName::Test => test.push(r),
        }
    }
    let name = &corpus.name;
    Ok(Splits {
        train: Corpus::new(format!("{name}/train"), train)?,
        validation: Corpus::new(format!("{name}/validation"), validation)?,
        test: Corpus::new(format!("{name}/test"), test)?,
    })
}

/// Per-(dataset, stratum) review counts in folds 1..=10 (index 0 is fold 1).
/// Reviews without a fold are ignored.
pub fn fold_counts(corpus: &Corpus, key: StratifyKey) -> BTreeMap<(Dataset, String), [usize; NUM_FOLDS as usize]> {
    let mut counts: BTreeMap<(Dataset, String), [usize; NUM_FOLDS as usize]> = BTreeMap::new();
    for r in corpus.reviews() {
        if let Some(f) = r.fold {
            counts.entry((r.dataset, key.stratum(r))).or_default()[usize::from(f.index() - 1)] += 1;
        }
    }
    counts
}

/// Largest deviation of any (stratum, fold) count from its proportional
/// share `stratum_size / 10`.
pub fn max_stratum_deviation(corpus: &Corpus, key: StratifyKey) -> f64 {
    fold_counts(corpus, key)
        .values()
        .flat_map(|row| {
            let share = row.iter().sum::<usize>() as f64 / f64::from(NUM_FOLDS);
            row.iter().map(move |&c| (c as f64 - share).abs())
        })
        .fold(0.0, f64::max)
}
