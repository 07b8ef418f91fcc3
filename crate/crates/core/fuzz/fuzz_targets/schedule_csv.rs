#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::schedule::{read_schedule_csv, AnnealSchedule, EnergyUnit};

fuzz_target!(|data: &[u8]| {
    let Ok(table) = read_schedule_csv(data, EnergyUnit::GHz) else {
        return;
    };
    let schedule = AnnealSchedule::tabulated(table, 10.0).expect("validated table builds a schedule");
    for k in 0..=16 {
        let (a, b) = schedule.evaluate(k as f64 / 16.0).expect("s in range");
        assert!(a.is_finite() && b.is_finite());
    }
});
