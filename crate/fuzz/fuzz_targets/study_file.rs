#![no_main]

use libfuzzer_sys::fuzz_target;
use ratingdml_cli::simulate::StudyFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = StudyFile::parse(text) {
        let _ = file.study();
    }
});
