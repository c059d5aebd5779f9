#![no_main]

use libfuzzer_sys::fuzz_target;
use sentibench::model::LinearModel;

fuzz_target!(|data: &[u8]| {
    let Ok(model) = LinearModel::from_json_slice(data) else {
        return;
    };
    let mut out = Vec::new();
    model.to_json_writer(&mut out).unwrap();
    let again = LinearModel::from_json_slice(&out).expect("written model reads back");
    assert_eq!(again, model);
});
