#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::vocab::Vocabulary;

fuzz_target!(|data: &[u8]| {
    let Ok(vocab) = Vocabulary::read_tsv_from(data) else {
        return;
    };
    let mut out = Vec::new();
    vocab.write_tsv_to(&mut out).unwrap();
    let again = Vocabulary::read_tsv_from(out.as_slice()).expect("written vocabulary reads back");
    assert_eq!(again, vocab);
});
