#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::corpus::{read_consolidated_from, write_consolidated_to};

fuzz_target!(|data: &[u8]| {
    let Ok(corpus) = read_consolidated_from(data, "fuzz") else {
        return;
    };
    let mut out = Vec::new();
    if write_consolidated_to(&corpus, &mut out).is_ok() {
        let again = read_consolidated_from(out.as_slice(), "fuzz").expect("written corpus reads back");
        assert_eq!(again.reviews(), corpus.reviews());
    }
});
