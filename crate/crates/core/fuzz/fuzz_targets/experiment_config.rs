#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::evaluation::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_toml(text) {
        let canonical = config.to_toml();
        let again = ExperimentConfig::from_toml(&canonical).expect("canonical config parses");
        assert_eq!(again.to_toml(), canonical);
    }
});
