#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::vectorize::EmbeddingTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = EmbeddingTable::from_reader(data, None, "fuzz") {
        assert!(table.dim() > 0);
    }
});
