#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::textprep::{normalize_text, preprocess, NormalizationConfig};

fuzz_target!(|text: &str| {
    let once = normalize_text(text);
    assert_eq!(normalize_text(&once), once);
    let cfg = NormalizationConfig::portuguese();
    for t in preprocess(text, &cfg) {
        assert!((2..=30).contains(&t.len()));
        assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
        assert!(!cfg.stopwords().contains(&t));
    }
});
