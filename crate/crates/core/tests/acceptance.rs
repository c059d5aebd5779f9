//! Acceptance suite. Prints one PASS / FAIL / SKIP line per criterion and
//! exits non-zero when any criterion fails. Criteria 8-13 need the public
//! datasets and embeddings under `$SENTIBENCH_DATA_DIR`:
//!
//! ```text
//! $SENTIBENCH_DATA_DIR/consolidated.csv          consolidated corpus with folds
//! $SENTIBENCH_DATA_DIR/embeddings/fasttext_s50.txt
//! $SENTIBENCH_DATA_DIR/embeddings/fasttext_s300.txt
//! $SENTIBENCH_DATA_DIR/embeddings/word2vec_s300.txt
//! ```

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use common::*;
use sentibench::cli::{Report, DATA_DIR_ENV};
use sentibench::corpus::{filter_polarity_task, read_consolidated, Corpus, Dataset, Rating, Review};
use sentibench::eval::{
    corpus_stats, cross_eval, fit_embedding_classifier, overlap_matrix, roc_auc, sweep_vocab_sizes, CrossEvalConfig,
    EvalReport, TfidfConfig, ALL_COLUMN, ALL_COMBINED,
};
use sentibench::model::{LogisticObjective, TrainConfig};
use sentibench::partition::{assign_folds, fold_counts, split, SplitName, Splits, StratifyKey};
use sentibench::textprep::{preprocess, NormalizationConfig};
use sentibench::vectorize::{fit_tfidf, load_embeddings, transform_tfidf, DenseVector, TfidfMode};
use sentibench::vocab::{build_vocabulary, count_ngrams, NgramRange, MAX_VOCAB_SIZE};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn main() {
    let criteria: [(&str, Check); 13] = [
        ("1 AUC equals O(n^2) pair counting", c1_auc_oracle),
        ("2 tf-idf hand values and unit norm", c2_tfidf_units),
        ("3 LR gradient vs central differences", c3_gradient_check),
        ("4 stratified fold balance", c4_stratification),
        ("5 pipeline determinism across runs and threads", c5_determinism),
        ("6 synthetic corpus end to end", c6_synthetic),
        ("7 tokenizer golden file", c7_tokenizer_golden),
        ("8 cross-eval diagonal", c8_diagonal),
        ("9 cross-eval off-diagonal spot checks", c9_off_diagonal),
        ("10 delta row", c10_delta),
        ("11 vocabulary sweep shape on B2W", c11_sweep),
        ("12 descriptive statistics", c12_stats),
        ("13 averaged-embedding ordering", c13_embeddings),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("PASS  criterion {name} ({secs:.1}s): {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.1}s): {d}");
            }
            Outcome::Skip(d) => println!("SKIP  criterion {name}: {d}"),
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (&si, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (&sj, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            pairs += 1.0;
            wins += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

fn c1_auc_oracle() -> Outcome {
    let mut g = Gen::new(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = 2 + g.below(499);
        let levels = 1 + g.below(n.min(40));
        let scores: Vec<f64> = (0..n).map(|_| g.below(levels) as f64 * 0.37 - 3.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| g.below(2) == 1).collect();
        labels[0] = true;
        labels[1] = false;
        let auc = roc_auc(&scores, &labels).unwrap();
        worst = worst.max((auc - brute_auc(&scores, &labels)).abs());
    }
    verdict(
        worst <= 1e-12,
        format!("max |difference| {worst:.2e} over 200 tied instances"),
    )
}

fn c2_tfidf_units() -> Outcome {
    let tok = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    let ln2 = std::f64::consts::LN_2;
    let mut errs = Vec::new();

    // N = 2: "bom" in one document, "produto" in both
    let docs = [tok(&["bom", "bom", "produto"]), tok(&["produto", "ruim"])];
    let vocab = build_vocabulary(&count_ngrams(&docs, NgramRange::UNIGRAMS), 0, 10).unwrap();
    let raw = fit_tfidf(vocab.clone(), TfidfMode::RawEq1).unwrap();
    let smooth = fit_tfidf(vocab.clone(), TfidfMode::SmoothedL2).unwrap();
    let bom = vocab.index_of("bom").unwrap();
    let produto = vocab.index_of("produto").unwrap();
    errs.push((raw.idf()[bom] - ln2).abs());
    errs.push(raw.idf()[produto].abs());
    errs.push((smooth.idf()[produto] - 1.0).abs());
    let v = transform_tfidf(&raw, &tok(&["bom", "bom"]));
    errs.push((v.get(bom) - 2.0 * ln2).abs());
    let v = transform_tfidf(&raw, &tok(&["produto", "produto", "produto"]));
    errs.push(v.nnz() as f64);
    let v = transform_tfidf(&raw, &tok(&["desconhecido"]));
    errs.push(v.nnz() as f64);
    let hand = errs.iter().copied().fold(0.0, f64::max);

    let mut g = Gen::new(2);
    let words = ["bom", "ruim", "otimo", "produto", "entrega", "caro", "tela", "chegou"];
    let corpus: Vec<Vec<String>> = (0..50)
        .map(|_| (0..1 + g.below(8)).map(|_| g.pick(&words).to_owned()).collect())
        .collect();
    let vocab = build_vocabulary(&count_ngrams(&corpus, NgramRange::UP_TO_BIGRAMS), 0, 100).unwrap();
    let smooth = fit_tfidf(vocab, TfidfMode::SmoothedL2).unwrap();
    let mut norm_err: f64 = 0.0;
    for doc in &corpus {
        norm_err = norm_err.max((transform_tfidf(&smooth, doc).norm() - 1.0).abs());
    }
    verdict(
        hand <= 1e-12 && norm_err <= 1e-12,
        format!("hand-value error {hand:.2e}, max |norm - 1| {norm_err:.2e}"),
    )
}

fn c3_gradient_check() -> Outcome {
    let mut g = Gen::new(3);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = 2 + g.below(49);
        let d = 1 + g.below(20);
        let x: Vec<DenseVector> = (0..n)
            .map(|_| DenseVector::from((0..d).map(|_| 4.0 * g.unit() - 2.0).collect::<Vec<_>>()))
            .collect();
        let mut y: Vec<bool> = (0..n).map(|_| g.below(2) == 1).collect();
        y[0] = true;
        y[1] = false;
        let lambda = g.unit();
        let obj = LogisticObjective::new(&x, &y, lambda).unwrap();
        let w: Vec<f64> = (0..d).map(|_| 2.0 * g.unit() - 1.0).collect();
        let b = 2.0 * g.unit() - 1.0;
        let (_, grad) = obj.value_and_gradient(&w, b);
        let mut fd = Vec::with_capacity(d + 1);
        for k in 0..=d {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if k < d {
                wp[k] += h;
                wm[k] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            fd.push((obj.value(&wp, bp) - obj.value(&wm, bm)) / (2.0 * h));
        }
        let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = grad
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(diff / scale.max(1e-12));
    }
    verdict(worst < 1e-5, format!("max relative error {worst:.2e} over 20 problems"))
}

fn c4_stratification() -> Outcome {
    let mut g = Gen::new(4);
    let datasets = [Dataset::Olist, Dataset::Buscape, Dataset::B2w];
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 1 + g.below(600);
        let reviews: Vec<Review> = (0..n)
            .map(|i| {
                let d = datasets[g.below(3)];
                let stars = 1 + g.below(5) as u8;
                Review::new(format!("c{case}-{i}"), d, "texto", Rating::new(stars).unwrap()).unwrap()
            })
            .collect();
        let corpus = Corpus::new("random", reviews).unwrap();
        for key in [StratifyKey::Rating, StratifyKey::Polarity] {
            let mut c = if key == StratifyKey::Polarity {
                filter_polarity_task(&corpus)
            } else {
                corpus.clone()
            };
            if c.is_empty() {
                continue;
            }
            assign_folds(&c, g.below(1 << 30) as u64, key)
                .unwrap()
                .apply(&mut c)
                .unwrap();
            for counts in fold_counts(&c, key).values() {
                let total: usize = counts.iter().sum();
                let share = total as f64 / 10.0;
                for &k in counts {
                    worst = worst.max((k as f64 - share).abs());
                }
            }
        }
    }
    verdict(
        worst <= 1.0,
        format!("max |count - share| {worst:.2} over 100 corpora x 2 keys"),
    )
}

struct RunArtifacts {
    files: Vec<(String, Vec<u8>)>,
}

fn pipeline_run(dir: &Path, threads: &str) -> RunArtifacts {
    let olist = write_raw(dir, "olist.csv", 50, 700);
    let b2w = write_raw(dir, "b2w.csv", 51, 700);
    let corpus = dir.join("consolidated.csv");
    let t = ["--threads", threads, "--seed", "7", "--vocab-size", "2000"];
    let with = |args: &[&str]| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend_from_slice(&t);
        run_cli(&v).unwrap()
    };
    let olist_arg = format!("olist={}", olist.display());
    let b2w_arg = format!("b2w={}", b2w.display());
    let names = [
        "consolidated.csv",
        "prepare.json",
        "partition.json",
        "model.json",
        "model.json.vocab.tsv",
        "train.json",
        "eval.json",
    ];
    let p = |n: &str| dir.join(n);
    with(&[
        "prepare",
        "--input",
        &olist_arg,
        "--input",
        &b2w_arg,
        "--out",
        s(&corpus),
        "--report",
        s(&p("prepare.json")),
    ]);
    with(&["partition", "--corpus", s(&corpus), "--report", s(&p("partition.json"))]);
    with(&[
        "train",
        "--corpus",
        s(&corpus),
        "--model",
        s(&p("model.json")),
        "--out",
        s(&p("train.json")),
    ]);
    with(&[
        "eval",
        "--corpus",
        s(&corpus),
        "--model",
        s(&p("model.json")),
        "--out",
        s(&p("eval.json")),
    ]);
    RunArtifacts {
        files: names
            .iter()
            .map(|n| (n.to_string(), std::fs::read(p(n)).unwrap()))
            .collect(),
    }
}

fn c5_determinism() -> Outcome {
    let runs: Vec<RunArtifacts> = ["1", "4", "1"]
        .iter()
        .map(|t| {
            let dir = tempfile::tempdir().unwrap();
            pipeline_run(dir.path(), t)
        })
        .collect();
    let mut differing = BTreeSet::new();
    for other in &runs[1..] {
        for ((name, a), (_, b)) in runs[0].files.iter().zip(&other.files) {
            if a != b {
                differing.insert(name.clone());
            }
        }
    }
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical over threads 1, 4, 1", runs[0].files.len())
        } else {
            format!("differs: {differing:?}")
        },
    )
}

fn c6_synthetic() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = prepared_corpus(d, &[("olist", 60, 3000)], &["--vocab-size", "1000"]);
    let model = d.join("model.json");
    let eval = d.join("eval.json");
    run_cli(&[
        "train",
        "--corpus",
        s(&corpus),
        "--model",
        s(&model),
        "--vocab-size",
        "1000",
    ])
    .unwrap();
    run_cli(&["eval", "--corpus", s(&corpus), "--model", s(&model), "--out", s(&eval)]).unwrap();
    let r: Report<EvalReport> = serde_json::from_slice(&std::fs::read(&eval).unwrap()).unwrap();
    let auc = r.result.roc_auc / 100.0;
    verdict(
        auc >= 0.99,
        format!("test ROC-AUC {auc:.4} on {} reviews", r.result.n_samples),
    )
}

fn c7_tokenizer_golden() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/tokenizer_golden.tsv");
    let text = std::fs::read_to_string(&path).unwrap();
    let cfg = NormalizationConfig::portuguese();
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let (input, expected) = line.split_once('\t').expect("golden line has a tab");
        let got = preprocess(input, &cfg).join(" ");
        cases += 1;
        if got != expected {
            mismatches.push(format!("{input:?}: expected {expected:?}, got {got:?}"));
        }
    }
    verdict(
        mismatches.is_empty() && cases == 50,
        if mismatches.is_empty() {
            format!("{cases} cases reproduced")
        } else {
            mismatches.join("; ")
        },
    )
}

// ---- paper-number reproduction ----

fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .filter(|p| p.join("consolidated.csv").is_file())
}

fn skip() -> Outcome {
    Outcome::Skip(format!("{DATA_DIR_ENV} unset or without consolidated.csv"))
}

fn full_corpus() -> Option<&'static Corpus> {
    static CORPUS: OnceLock<Option<Corpus>> = OnceLock::new();
    CORPUS
        .get_or_init(|| data_dir().map(|d| read_consolidated(d.join("consolidated.csv")).expect("consolidated.csv")))
        .as_ref()
}

fn polarity_splits(corpus: &Corpus, d: Dataset) -> Splits {
    split(&filter_polarity_task(&corpus.subset(d))).expect("every review has a fold")
}

fn cross_matrix() -> Option<&'static sentibench::eval::CrossEvalMatrix> {
    static MATRIX: OnceLock<Option<sentibench::eval::CrossEvalMatrix>> = OnceLock::new();
    MATRIX
        .get_or_init(|| {
            let corpus = full_corpus()?;
            let splits: Vec<(String, Splits)> = Dataset::ALL
                .iter()
                .map(|&d| (d.display_name().to_owned(), polarity_splits(corpus, d)))
                .collect();
            let config = CrossEvalConfig {
                tfidf: TfidfConfig::default(),
                train: TrainConfig::default(),
                include_all_column: true,
            };
            Some(cross_eval(&splits, &config).expect("cross evaluation"))
        })
        .as_ref()
}

fn within(label: &str, got: f64, want: f64, tol: f64, notes: &mut Vec<String>) -> bool {
    let ok = (got - want).abs() <= tol;
    notes.push(format!(
        "{label} {got:.1} (target {want} +/-{tol}){}",
        if ok { "" } else { " MISS" }
    ));
    ok
}

fn c8_diagonal() -> Outcome {
    let Some(m) = cross_matrix() else { return skip() };
    let targets = [
        ("Olist", 96.5),
        ("Buscape", 91.4),
        ("B2W", 98.2),
        ("UTLCApps", 96.0),
        ("UTLCMovies", 93.1),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, want) in targets {
        ok &= within(name, m.cell(name, name).unwrap(), want, 1.5, &mut notes);
    }
    ok &= within("All", m.cell(ALL_COMBINED, ALL_COLUMN).unwrap(), 95.1, 1.5, &mut notes);
    verdict(ok, notes.join(", "))
}

fn c9_off_diagonal() -> Outcome {
    let Some(m) = cross_matrix() else { return skip() };
    let mut notes = Vec::new();
    let a = within(
        "Buscape->Olist",
        m.cell("Buscape", "Olist").unwrap(),
        91.6,
        2.0,
        &mut notes,
    );
    let b = within(
        "Olist->UTLCMovies",
        m.cell("Olist", "UTLCMovies").unwrap(),
        66.7,
        3.0,
        &mut notes,
    );
    verdict(a && b, notes.join(", "))
}

fn c10_delta() -> Outcome {
    let Some(m) = cross_matrix() else { return skip() };
    let ok = m.delta.iter().all(|&d| d.abs() <= 1.0 && d <= 0.0);
    let notes: Vec<String> = m
        .eval_labels
        .iter()
        .zip(&m.delta)
        .map(|(l, d)| format!("{l} {d:+.2}"))
        .collect();
    verdict(ok, notes.join(", "))
}

fn c11_sweep() -> Outcome {
    let Some(corpus) = full_corpus() else { return skip() };
    let splits = polarity_splits(corpus, Dataset::B2w);
    let points = sweep_vocab_sizes(
        "B2W",
        &splits,
        &[50, 5000, 10_000, MAX_VOCAB_SIZE],
        &TfidfConfig::default(),
        &TrainConfig::default(),
    )
    .expect("sweep");
    let auc = |i: usize| points[i].report.roc_auc;
    let rise = auc(1) - auc(0);
    let plateau = auc(3) - auc(2);
    verdict(
        rise >= 3.0 && plateau <= 1.0,
        format!(
            "AUC(5000)-AUC(50) = {rise:.2} (>= 3), AUC(max={})-AUC(10000) = {plateau:.2} (<= 1)",
            points[3].vocab_size
        ),
    )
}

/// dataset (None = all), mean length, median length, rating %, polarity %
type StatsRow = (Option<Dataset>, f64, f64, [f64; 5], [f64; 2]);

fn c12_stats() -> Outcome {
    let Some(corpus) = full_corpus() else { return skip() };
    let table: [StatsRow; 6] = [
        (
            Some(Dataset::Olist),
            7.0,
            6.0,
            [22.0, 5.3, 8.8, 14.5, 49.4],
            [30.0, 70.0],
        ),
        (
            Some(Dataset::Buscape),
            25.0,
            17.0,
            [3.7, 4.3, 13.4, 39.5, 39.1],
            [9.2, 90.8],
        ),
        (
            Some(Dataset::B2w),
            14.0,
            10.0,
            [20.7, 6.3, 12.3, 24.4, 36.2],
            [30.8, 69.2],
        ),
        (
            Some(Dataset::UtlcApps),
            7.0,
            5.0,
            [16.4, 4.5, 6.8, 11.4, 60.8],
            [22.5, 77.5],
        ),
        (
            Some(Dataset::UtlcMovies),
            21.0,
            10.0,
            [2.4, 6.8, 20.0, 36.7, 34.0],
            [11.6, 88.4],
        ),
        (None, 15.0, 7.0, [8.9, 5.8, 14.4, 26.4, 44.5], [17.2, 82.8]),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (d, mean, median, rating, polarity) in table {
        let sub = match d {
            Some(d) => corpus.subset(d),
            None => corpus.clone(),
        };
        let st = corpus_stats(&sub);
        let name = d.map_or("All", |d| d.display_name());
        let mut row_ok = (st.mean_len - mean).abs() <= 1.0 && (st.median_len - median).abs() <= 1.0;
        for (got, want) in st
            .rating_pct
            .iter()
            .zip(rating)
            .chain(st.polarity_pct.iter().zip(polarity))
        {
            row_ok &= (got - want).abs() <= 0.5;
        }
        if !row_ok {
            notes.push(format!(
                "{name}: mean {:.1} median {:.1} ratings {:.1?} polarity {:.1?} MISS",
                st.mean_len, st.median_len, st.rating_pct, st.polarity_pct
            ));
        }
        ok &= row_ok;
    }
    let vocabs: Vec<(String, sentibench::vocab::Vocabulary)> = Dataset::ALL
        .iter()
        .map(|&d| {
            let sub = corpus.subset(d);
            let docs: Vec<&[String]> = sub.reviews().iter().map(|r| r.tokens()).collect();
            let v = build_vocabulary(&count_ngrams(&docs, NgramRange::UNIGRAMS), 5, usize::MAX).unwrap();
            (d.display_name().to_owned(), v)
        })
        .collect();
    let m = overlap_matrix(&vocabs).unwrap();
    ok &= within("Olist overlap row average", m.row_avg[0], 15.5, 1.5, &mut notes);
    verdict(ok, notes.join("; "))
}

fn c13_embeddings() -> Outcome {
    let Some(corpus) = full_corpus() else { return skip() };
    let dir = data_dir().unwrap().join("embeddings");
    let files = [
        ("fasttext-50", "fasttext_s50.txt", 50),
        ("fasttext-300", "fasttext_s300.txt", 300),
        ("word2vec-300", "word2vec_s300.txt", 300),
    ];
    if files.iter().any(|(_, f, _)| !dir.join(f).is_file()) {
        return Outcome::Skip(format!("embedding files missing under {}", dir.display()));
    }
    let tables: Vec<_> = files
        .iter()
        .map(|(_, f, dim)| Arc::new(load_embeddings(dir.join(f), Some(*dim)).expect("embedding file")))
        .collect();
    let mut notes = Vec::new();
    let mut ok = true;
    for d in [Dataset::Olist, Dataset::B2w] {
        let splits = polarity_splits(corpus, d);
        let dev = splits.development();
        let test: Vec<&Review> = splits.test.reviews().iter().collect();
        let aucs: Vec<f64> = tables
            .iter()
            .map(|t| {
                let clf = fit_embedding_classifier(&dev, t.clone(), 5, &TrainConfig::default()).unwrap();
                clf.evaluate(d.display_name(), SplitName::Test, &test).unwrap().roc_auc
            })
            .collect();
        let good = aucs[1] > aucs[0] && aucs[1] > aucs[2];
        ok &= good;
        notes.push(format!(
            "{}: ft50 {:.1}, ft300 {:.1}, w2v300 {:.1}{}",
            d.display_name(),
            aucs[0],
            aucs[1],
            aucs[2],
            if good { "" } else { " MISS" }
        ));
    }
    verdict(ok, notes.join("; "))
}
