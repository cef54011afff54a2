#![no_main]

use libfuzzer_sys::fuzz_target;
use ratingdml::dataset::{parse_rating_cell, Rating, TreatmentGranularity};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(Some(rating)) = parse_rating_cell(Some(text)) {
        // canonical tokens parse back to the same notch
        assert_eq!(rating.token().parse::<Rating>().unwrap(), rating);
        for level in [TreatmentGranularity::InvSpec, TreatmentGranularity::Broad] {
            assert!(level.column_of(rating) < level.width());
        }
    }
});
