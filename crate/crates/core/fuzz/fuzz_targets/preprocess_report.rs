#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::data::PreprocessReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = PreprocessReport::from_toml(text) {
        let canonical = report.to_toml();
        let again = PreprocessReport::from_toml(&canonical).expect("canonical report parses");
        assert_eq!(again.to_toml(), canonical);
    }
});
