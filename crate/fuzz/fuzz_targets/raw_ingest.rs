#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::corpus::{ingest_reader, ColumnMap, Dataset};
use sentibench::textprep::{preprocess, NormalizationConfig};

fuzz_target!(|data: &[u8]| {
    let columns = ColumnMap {
        id: Some("id".into()),
        fold: Some("kfold".into()),
        ..ColumnMap::default()
    };
    if let Ok((corpus, report)) = ingest_reader(data, Dataset::Olist, &columns) {
        assert_eq!(report.kept, corpus.len());
        assert_eq!(report.rows, report.kept + report.dropped());
        let cfg = NormalizationConfig::portuguese();
        for r in corpus.reviews() {
            preprocess(&r.text, &cfg);
        }
    }
});
