//! Review data model, raw CSV ingestion and the consolidated dataset file.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Header of the consolidated CSV, in column order.
pub const CONSOLIDATED_HEADER: [&str; 7] = ["id", "dataset", "review_text", "rating", "polarity", "kfold", "tokens"];

pub const NUM_FOLDS: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Olist,
    Buscape,
    B2w,
    UtlcApps,
    UtlcMovies,
}

impl Dataset {
    pub const ALL: [Dataset; 5] = [
        Dataset::Olist,
        Dataset::Buscape,
        Dataset::B2w,
        Dataset::UtlcApps,
        Dataset::UtlcMovies,
    ];

    /// Lowercase key used in files.
    pub fn key(self) -> &'static str {
        match self {
            Dataset::Olist => "olist",
            Dataset::Buscape => "buscape",
            Dataset::B2w => "b2w",
            Dataset::UtlcApps => "utlc_apps",
            Dataset::UtlcMovies => "utlc_movies",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Dataset::Olist => "Olist",
            Dataset::Buscape => "Buscape",
            Dataset::B2w => "B2W",
            Dataset::UtlcApps => "UTLCApps",
            Dataset::UtlcMovies => "UTLCMovies",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "olist" => Ok(Dataset::Olist),
            "buscape" => Ok(Dataset::Buscape),
            "b2w" => Ok(Dataset::B2w),
            "utlcapps" => Ok(Dataset::UtlcApps),
            "utlcmovies" => Ok(Dataset::UtlcMovies),
            _ => Err(Error::Config(format!("unknown dataset `{s}`"))),
        }
    }
}

/// Star rating in 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Rating(u8);

impl Rating {
    pub fn new(stars: u8) -> Result<Self> {
        if (1..=5).contains(&stars) {
            Ok(Rating(stars))
        } else {
            Err(Error::Domain(format!("rating {stars} outside 1..=5")))
        }
    }

    pub fn stars(self) -> u8 {
        self.0
    }

    pub fn polarity(self) -> Option<Polarity> {
        match self.0 {
            1 | 2 => Some(Polarity::Negative),
            4 | 5 => Some(Polarity::Positive),
            _ => None,
        }
    }
}

impl TryFrom<u8> for Rating {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Rating::new(v)
    }
}

impl From<Rating> for u8 {
    fn from(r: Rating) -> u8 {
        r.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn label(self) -> u8 {
        match self {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }
}

/// Map a 1..=5 rating to its polarity: 1,2 negative; 4,5 positive; 3 none.
pub fn assign_polarity(rating: u8) -> Result<Option<Polarity>> {
    Ok(Rating::new(rating)?.polarity())
}

/// Fold index in 1..=10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fold(u8);

impl Fold {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=NUM_FOLDS).contains(&index) {
            Ok(Fold(index))
        } else {
            Err(Error::Domain(format!("fold {index} outside 1..={NUM_FOLDS}")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Review {
    pub id: String,
    pub dataset: Dataset,
    pub text: String,
    pub rating: Rating,
    pub polarity: Option<Polarity>,
    pub fold: Option<Fold>,
    pub tokens: Option<Vec<String>>,
}

impl Review {
    /// Build a review with polarity derived from the rating.
    pub fn new(id: impl Into<String>, dataset: Dataset, text: impl Into<String>, rating: Rating) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Domain("review text is empty".into()));
        }
        Ok(Review {
            id: id.into(),
            dataset,
            text,
            rating,
            polarity: rating.polarity(),
            fold: None,
            tokens: None,
        })
    }

    pub fn tokens(&self) -> &[String] {
        self.tokens.as_deref().unwrap_or(&[])
    }
}

/// An ordered collection of reviews with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub name: String,
    reviews: Vec<Review>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, reviews: Vec<Review>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(reviews.len());
        for r in &reviews {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Schema(format!("duplicate review id `{}`", r.id)));
            }
        }
        Ok(Corpus {
            name: name.into(),
            reviews,
        })
    }

    /// Concatenate corpora in order. An id already taken by an earlier review
    /// is prefixed with the review's dataset key.
    pub fn merge(name: impl Into<String>, parts: impl IntoIterator<Item = Corpus>) -> Result<Self> {
        let mut seen: HashSet<String> = HashSet::new();
        let mut reviews = Vec::new();
        for part in parts {
            for mut r in part.reviews {
                if seen.contains(&r.id) {
                    let base = format!("{}_{}", r.dataset.key(), r.id);
                    let mut candidate = base.clone();
                    let mut n = 2;
                    while seen.contains(&candidate) {
                        candidate = format!("{base}~{n}");
                        n += 1;
                    }
                    r.id = candidate;
                }
                seen.insert(r.id.clone());
                reviews.push(r);
            }
        }
        Corpus::new(name, reviews)
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn reviews_mut(&mut self) -> &mut [Review] {
        &mut self.reviews
    }

    pub fn into_reviews(self) -> Vec<Review> {
        self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    /// Distinct datasets in first-appearance order.
    pub fn datasets(&self) -> Vec<Dataset> {
        let mut out = Vec::new();
        for r in &self.reviews {
            if !out.contains(&r.dataset) {
                out.push(r.dataset);
            }
        }
        out
    }

    pub fn subset(&self, dataset: Dataset) -> Corpus {
        self.filter(dataset.display_name(), |r| r.dataset == dataset)
    }

    pub fn filter(&self, name: impl Into<String>, mut keep: impl FnMut(&Review) -> bool) -> Corpus {
        Corpus {
            name: name.into(),
            reviews: self.reviews.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }
}

/// Reviews with a polarity label, in original order.
pub fn filter_polarity_task(corpus: &Corpus) -> Corpus {
    corpus.filter(corpus.name.clone(), |r| r.polarity.is_some())
}

/// Names of the raw CSV columns holding each review field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub text: String,
    pub rating: String,
    /// When absent, ids are generated as `<dataset>-<row>`.
    pub id: Option<String>,
    /// Pre-assigned fold column (published partitions).
    pub fold: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            text: "text".into(),
            rating: "rating".into(),
            id: None,
            fold: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub dataset: String,
    pub rows: usize,
    pub kept: usize,
    pub malformed: usize,
    pub empty_text: usize,
    pub null_rating: usize,
    pub zero_rating: usize,
    pub out_of_range_rating: usize,
    /// Duplicate ids inside the file that were suffixed to stay unique.
    pub renamed_ids: usize,
    /// (line, reason) for each malformed row.
    pub malformed_rows: Vec<(u64, String)>,
}

impl IngestReport {
    pub fn dropped(&self) -> usize {
        self.malformed + self.empty_text + self.null_rating + self.zero_rating + self.out_of_range_rating
    }
}

enum RatingField {
    Null,
    Value(i64),
}

fn parse_rating_field(raw: &str) -> std::result::Result<RatingField, String> {
    let s = raw.trim();
    if s.is_empty() || ["nan", "null", "na", "none"].iter().any(|n| s.eq_ignore_ascii_case(n)) {
        return Ok(RatingField::Null);
    }
    if let Ok(v) = s.parse::<i64>() {
        return Ok(RatingField::Value(v));
    }
    // integral decimals such as "5.0" are accepted, fractions are not
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e9 => Ok(RatingField::Value(v as i64)),
        Ok(_) => Err(format!("non-integer rating `{s}`")),
        Err(_) => Err(format!("unparseable rating `{s}`")),
    }
}

fn parse_fold_field(raw: &str) -> std::result::Result<Option<Fold>, String> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v = match s.parse::<i64>() {
        Ok(v) => v,
        Err(_) => match s.parse::<f64>() {
            Ok(f) if f.is_finite() && f.fract() == 0.0 && f.abs() < 1e9 => f as i64,
            _ => return Err(format!("unparseable fold `{s}`")),
        },
    };
    // out-of-range values are sentinels for rows excluded from a task
    Ok(u8::try_from(v).ok().and_then(|v| Fold::new(v).ok()))
}

fn column_index(headers: &csv::ByteRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name.as_bytes())
        .ok_or_else(|| Error::MissingColumn {
            column: name.to_owned(),
            found: headers
                .iter()
                .map(|h| String::from_utf8_lossy(h).into_owned())
                .collect::<Vec<_>>()
                .join(","),
        })
}

/// Ingest a raw per-dataset CSV export.
pub fn ingest_raw(path: impl AsRef<Path>, dataset: Dataset, columns: &ColumnMap) -> Result<(Corpus, IngestReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(std::io::BufReader::new(file), dataset, columns)
}

/// Ingest raw CSV from any reader. Rows are dropped by the first matching
/// rule in the order: malformed, empty text, invalid rating.
pub fn ingest_reader<R: Read>(reader: R, dataset: Dataset, columns: &ColumnMap) -> Result<(Corpus, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.byte_headers()?.clone();
    let text_idx = column_index(&headers, &columns.text)?;
    let rating_idx = column_index(&headers, &columns.rating)?;
    let id_idx = columns.id.as_deref().map(|c| column_index(&headers, c)).transpose()?;
    let fold_idx = columns.fold.as_deref().map(|c| column_index(&headers, c)).transpose()?;

    let mut report = IngestReport {
        dataset: dataset.key().to_owned(),
        ..Default::default()
    };
    let mut reviews = Vec::new();
    let mut id_uses: HashMap<String, usize> = HashMap::new();
    let mut record = csv::ByteRecord::new();

    loop {
        let line = rdr.position().line();
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => {
                let fatal = matches!(err.kind(), csv::ErrorKind::Io(_));
                if fatal {
                    return Err(err.into());
                }
                report.rows += 1;
                report.malformed += 1;
                let at = err.position().map(|p| p.line()).unwrap_or(line);
                report.malformed_rows.push((at, err.to_string()));
                continue;
            }
        }
        report.rows += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(line);

        let field = |idx: usize| -> std::result::Result<&str, String> {
            let bytes = record.get(idx).ok_or_else(|| format!("missing field {idx}"))?;
            std::str::from_utf8(bytes).map_err(|e| format!("invalid UTF-8: {e}"))
        };
        let parsed = (|| {
            let text = field(text_idx)?;
            let rating = parse_rating_field(field(rating_idx)?)?;
            let id = id_idx.map(&field).transpose()?;
            let fold = fold_idx
                .map(|i| field(i).and_then(parse_fold_field))
                .transpose()?
                .flatten();
            Ok::<_, String>((text, rating, id, fold))
        })();
        let (text, rating, id, fold) = match parsed {
            Ok(v) => v,
            Err(reason) => {
                report.malformed += 1;
                report.malformed_rows.push((line, reason));
                continue;
            }
        };

        if text.trim().is_empty() {
            report.empty_text += 1;
            continue;
        }
        let rating = match rating {
            RatingField::Null => {
                report.null_rating += 1;
                continue;
            }
            RatingField::Value(0) => {
                report.zero_rating += 1;
                continue;
            }
            RatingField::Value(v) => match u8::try_from(v).ok().and_then(|v| Rating::new(v).ok()) {
                Some(r) => r,
                None => {
                    report.out_of_range_rating += 1;
                    continue;
                }
            },
        };

        let base_id = match id.map(str::trim).filter(|s| !s.is_empty()) {
            Some(id) => id.to_owned(),
            None => format!("{}-{}", dataset.key(), report.rows),
        };
        let uses = id_uses.entry(base_id.clone()).or_insert(0);
        *uses += 1;
        let id = if *uses == 1 {
            base_id
        } else {
            report.renamed_ids += 1;
            format!("{base_id}~{uses}")
        };

        let mut review = Review::new(id, dataset, text, rating)?;
        review.fold = fold;
        reviews.push(review);
    }

    report.kept = reviews.len();
    // a suffixed id can still collide with a literal id from the file
    let corpus = Corpus::merge(
        dataset.display_name(),
        [Corpus {
            name: String::new(),
            reviews,
        }],
    )?;
    Ok((corpus, report))
}

fn write_rows<W: Write>(corpus: &Corpus, writer: W, require_folds: bool) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    wtr.write_record(CONSOLIDATED_HEADER)?;
    for r in corpus.reviews() {
        let tokens = r
            .tokens
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("review `{}` has no tokens", r.id)))?;
        if require_folds && r.fold.is_none() {
            return Err(Error::Precondition(format!("review `{}` has no fold assigned", r.id)));
        }
        let rating = r.rating.stars().to_string();
        let polarity = r.polarity.map(|p| p.label().to_string()).unwrap_or_default();
        let fold = r.fold.map(|f| f.index().to_string()).unwrap_or_default();
        let tokens = tokens.join(" ");
        wtr.write_record([
            r.id.as_str(),
            r.dataset.key(),
            r.text.as_str(),
            rating.as_str(),
            polarity.as_str(),
            fold.as_str(),
            tokens.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Serialize a fully partitioned corpus into the consolidated CSV format.
pub fn write_consolidated_to<W: Write>(corpus: &Corpus, writer: W) -> Result<()> {
    write_rows(corpus, writer, true)
}

/// Write the consolidated CSV atomically. Every review needs a fold and tokens.
pub fn write_consolidated(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    check_folds(corpus)?;
    write_atomic(path.as_ref(), |w| write_rows(corpus, w, true))
}

/// Like [`write_consolidated`] but leaves `kfold` blank for unpartitioned reviews.
pub fn write_prepared(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| write_rows(corpus, w, false))
}

fn check_folds(corpus: &Corpus) -> Result<()> {
    match corpus.reviews().iter().find(|r| r.fold.is_none() || r.tokens.is_none()) {
        Some(r) if r.tokens.is_none() => Err(Error::Precondition(format!("review `{}` has no tokens", r.id))),
        Some(r) => Err(Error::Precondition(format!("review `{}` has no fold assigned", r.id))),
        None => Ok(()),
    }
}

pub fn read_consolidated(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_consolidated_from(std::io::BufReader::new(file), name)
}

/// Parse the consolidated CSV. A blank `kfold` yields an unpartitioned review.
pub fn read_consolidated_from<R: Read>(reader: R, name: impl Into<String>) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.byte_headers()?.clone();
    let missing: Vec<&str> = CONSOLIDATED_HEADER
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == c.as_bytes()))
        .collect();
    if !missing.is_empty() {
        let found: Vec<String> = headers
            .iter()
            .map(|h| String::from_utf8_lossy(h).into_owned())
            .collect();
        return Err(Error::Schema(format!(
            "consolidated file is missing column(s) {} (found: {})",
            missing.join(","),
            found.join(",")
        )));
    }
    let idx: Vec<usize> = CONSOLIDATED_HEADER
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;

    let mut reviews = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0) as usize;
        let bad = |message: String| Error::Parse { line, message };
        let get = |i: usize| record.get(idx[i]).unwrap_or("");

        let dataset: Dataset = get(1)
            .parse()
            .map_err(|_| bad(format!("unknown dataset `{}`", get(1))))?;
        let stars: u8 = get(3)
            .parse()
            .map_err(|_| bad(format!("invalid rating `{}`", get(3))))?;
        let rating = Rating::new(stars).map_err(|e| bad(e.to_string()))?;
        let polarity = match get(4) {
            "" => None,
            "0" => Some(Polarity::Negative),
            "1" => Some(Polarity::Positive),
            other => return Err(bad(format!("invalid polarity `{other}`"))),
        };
        if polarity != rating.polarity() {
            return Err(bad(format!("polarity `{}` inconsistent with rating {stars}", get(4))));
        }
        let fold = match get(5) {
            "" => None,
            s => {
                let v: u8 = s.parse().map_err(|_| bad(format!("invalid kfold `{s}`")))?;
                Some(Fold::new(v).map_err(|e| bad(e.to_string()))?)
            }
        };
        let tokens = get(6).split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
        let mut review = Review::new(get(0), dataset, get(2), rating).map_err(|e| bad(e.to_string()))?;
        review.fold = fold;
        review.tokens = Some(tokens);
        reviews.push(review);
    }
    Corpus::new(name, reviews)
}
