#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::quench::StateVector;

fuzz_target!(|data: &[u8]| {
    if let Ok(state) = StateVector::from_bytes(data) {
        assert_eq!(state.to_bytes(), data);
    }
});
