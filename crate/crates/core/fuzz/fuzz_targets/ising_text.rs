#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::encoding::IsingInstance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(inst) = IsingInstance::from_text(text) {
        let again = IsingInstance::from_text(&inst.to_text()).expect("canonical text parses");
        assert_eq!(again, inst);
    }
});
