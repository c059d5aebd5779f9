//! Human-readable tables (Markdown and TSV) for the evaluation reports.

use std::fmt::Write as _;

use crate::eval::pipeline::{CrossEvalMatrix, EvalReport, SweepPoint};
use crate::eval::stats::{CorpusStats, OverlapMatrix, SplitCounts};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn to_markdown(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|r| r.get(c))
                    .chain(std::iter::once(&self.headers[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
                    .max(3)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (c, w) in widths.iter().enumerate() {
                let cell = cells.get(c).map(String::as_str).unwrap_or("");
                let _ = write!(s, " {cell:<w$} |");
            }
            s.push('\n');
            s
        };
        let mut out = line(&self.headers);
        out.push('|');
        for w in &widths {
            out.push_str(&"-".repeat(w + 2));
            out.push('|');
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.headers.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }
}

fn f1(v: f64) -> String {
    format!("{v:.1}")
}

fn splits(c: Option<SplitCounts>) -> [String; 3] {
    match c {
        Some(c) => [c.train.to_string(), c.validation.to_string(), c.test.to_string()],
        None => ["-".into(), "-".into(), "-".into()],
    }
}

/// Sample counts, lengths, vocabulary sizes and label distribution per corpus.
pub fn stats_tables(stats: &[CorpusStats]) -> Vec<(String, Table)> {
    let mut samples = Table::new(["Dataset", "Task", "Train", "Validation", "Test"]);
    let mut lengths = Table::new([
        "Dataset",
        "Mean length",
        "Median length",
        "Vocab (1 gram)",
        "Vocab (1 and 2 grams)",
        "Vocab (1 gram, unfiltered)",
        "Vocab (1 and 2 grams, unfiltered)",
    ]);
    let mut labels = Table::new(std::iter::once("Label".to_string()).chain(stats.iter().map(|s| s.name.clone())));
    for s in stats {
        let [a, b, c] = splits(s.polarity_splits);
        samples.push([s.name.clone(), "Polarity".into(), a, b, c]);
        let [a, b, c] = splits(s.rating_splits);
        samples.push([s.name.clone(), "Rating".into(), a, b, c]);
        lengths.push([
            s.name.clone(),
            f1(s.mean_len),
            f1(s.median_len),
            s.vocab.unigrams.to_string(),
            s.vocab.up_to_bigrams.to_string(),
            s.vocab.unigrams_unfiltered.to_string(),
            s.vocab.up_to_bigrams_unfiltered.to_string(),
        ]);
    }
    for star in 0..5 {
        labels.push(std::iter::once((star + 1).to_string()).chain(stats.iter().map(|s| f1(s.rating_pct[star]))));
    }
    labels.push(std::iter::once("0 (1-2)".to_string()).chain(stats.iter().map(|s| f1(s.polarity_pct[0]))));
    labels.push(std::iter::once("1 (4-5)".to_string()).chain(stats.iter().map(|s| f1(s.polarity_pct[1]))));
    vec![
        ("Samples per split".into(), samples),
        ("Document length and vocabulary size".into(), lengths),
        ("Label distribution (%)".into(), labels),
    ]
}

pub fn overlap_table(m: &OverlapMatrix) -> Table {
    let mut t = Table::new(
        std::iter::once("Dataset".to_string())
            .chain(m.labels.iter().cloned())
            .chain(std::iter::once("Avg".to_string())),
    );
    for (r, label) in m.labels.iter().enumerate() {
        t.push(
            std::iter::once(label.clone())
                .chain(m.cells[r].iter().map(|&v| f1(v)))
                .chain(std::iter::once(f1(m.row_avg[r]))),
        );
    }
    t.push(
        std::iter::once("Average".to_string())
            .chain(m.col_avg.iter().map(|&v| f1(v)))
            .chain(std::iter::once("-".to_string())),
    );
    t
}

pub fn sweep_table(points: &[SweepPoint]) -> Table {
    let mut t = Table::new(["dataset", "requested", "vocab_size", "roc_auc", "n_test"]);
    for p in points {
        t.push([
            p.report.dataset.clone(),
            p.requested.to_string(),
            p.vocab_size.to_string(),
            format!("{:.4}", p.report.roc_auc),
            p.report.n_samples.to_string(),
        ]);
    }
    t
}

pub fn cross_table(m: &CrossEvalMatrix) -> Table {
    let mut t = Table::new(std::iter::once("Model".to_string()).chain(m.eval_labels.iter().cloned()));
    for (label, row) in m.train_labels.iter().zip(&m.cells) {
        t.push(std::iter::once(label.clone()).chain(row.iter().map(|&v| f1(v))));
    }
    let extra = m.eval_labels.len() - m.delta.len();
    t.push(
        std::iter::once("Delta".to_string())
            .chain(m.delta.iter().map(|&v| f1(v)))
            .chain(std::iter::repeat_n("-".to_string(), extra)),
    );
    t
}

pub fn eval_table(reports: &[EvalReport]) -> Table {
    let mut t = Table::new(["dataset", "split", "roc_auc", "n_samples", "model"]);
    for r in reports {
        t.push([
            r.dataset.clone(),
            format!("{:?}", r.split).to_lowercase(),
            format!("{:.4}", r.roc_auc),
            r.n_samples.to_string(),
            r.model_descriptor.clone(),
        ]);
    }
    t
}
