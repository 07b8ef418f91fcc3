#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::ml::GbtModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = GbtModel::from_text(text) {
        let again = GbtModel::from_text(&model.to_text()).expect("canonical text parses");
        assert_eq!(again, model);
        // Every accepted tree must terminate on any input.
        let x = vec![0.0; model.n_features];
        assert!(model.raw_score(&x).is_finite());
    }
});
