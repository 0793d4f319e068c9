#![no_main]

use libfuzzer_sys::fuzz_target;
use rhodopsin::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::parse(text) {
        let again = ExperimentConfig::parse(&config.to_config_string()).expect("reparse");
        assert_eq!(again, config);
    }
});
