#![no_main]

use libfuzzer_sys::fuzz_target;
use ratingdml_cli::artifacts::{parse_fit_table, parse_inference_table, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = parse_fit_table(text) {
        let back = parse_fit_table(&to_json(&table).unwrap()).unwrap();
        assert_eq!(back.records.len(), table.records.len());
    }
    let _ = parse_inference_table(text);
});
