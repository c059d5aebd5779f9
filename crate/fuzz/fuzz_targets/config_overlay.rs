#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::cli::{ConfigOverlay, RunConfig, SharedFlags};

fuzz_target!(|text: &str| {
    if let Ok(overlay) = ConfigOverlay::parse(text) {
        let _ = RunConfig::resolve("fuzz", &SharedFlags::default(), &overlay);
    }
});
