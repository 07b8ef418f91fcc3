#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::ml::SvmModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = SvmModel::from_text(text) {
        let canonical = model.to_text();
        let again = SvmModel::from_text(&canonical).expect("canonical text parses");
        assert_eq!(again.to_text(), canonical);
    }
});
