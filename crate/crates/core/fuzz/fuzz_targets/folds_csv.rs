#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::evaluation::{parse_folds_csv, write_folds_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = parse_folds_csv(data) else {
        return;
    };
    let mut out = Vec::new();
    write_folds_csv(&records, &mut out).expect("records write");
    let again = parse_folds_csv(out.as_slice()).expect("written records parse");
    assert_eq!(again.len(), records.len());
});
