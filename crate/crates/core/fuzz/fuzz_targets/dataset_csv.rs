#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::data::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = read_csv(data, "label") else {
        return;
    };
    let mut out = Vec::new();
    write_csv(&parsed, &mut out, "label").expect("parsed dataset writes");
    let again = read_csv(out.as_slice(), "label").expect("written dataset parses");
    assert_eq!(again.n_rows(), parsed.n_rows());
    assert_eq!(again.n_cols(), parsed.n_cols());
    assert_eq!(again.missing_mask(), parsed.missing_mask());
});
