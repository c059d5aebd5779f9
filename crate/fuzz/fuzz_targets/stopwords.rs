#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::textprep::{parse_stopwords, NormalizationConfig};

fuzz_target!(|text: &str| {
    if let Ok(words) = parse_stopwords(text) {
        let _ = NormalizationConfig::new(2, 30, words);
    }
});
