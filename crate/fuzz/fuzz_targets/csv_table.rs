#![no_main]

use libfuzzer_sys::fuzz_target;
use ratingdml::dataset::{
    apply_sample_filters, engineer_features, parse_csv, schema, FeatureConfig, FilterRules,
    TreatmentGranularity,
};

fuzz_target!(|data: &[u8]| {
    let Ok(table) = parse_csv(data, &schema::fixture_schema(), b',') else {
        return;
    };
    let Ok(sample) = apply_sample_filters(&table, &FilterRules::default()) else {
        return;
    };
    assert!(sample.row_count() <= table.row_count());
    let config = FeatureConfig {
        granularity: TreatmentGranularity::Granular,
        ..FeatureConfig::default()
    };
    if let Ok(ds) = engineer_features(&sample, &config) {
        assert!(ds.treatments.row_iter().all(|r| r.sum() <= 1.0));
    }
});
