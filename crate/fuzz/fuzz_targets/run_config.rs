#![no_main]

use libfuzzer_sys::fuzz_target;
use ratingdml_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = RunConfig::parse(text) {
        let _ = config.validate();
        // anything accepted must survive a write/read cycle
        let again = RunConfig::parse(&config.to_toml().unwrap()).unwrap();
        assert_eq!(again.to_toml().unwrap(), config.to_toml().unwrap());
    }
});
