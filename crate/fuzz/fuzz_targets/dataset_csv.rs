#![no_main]

use envcontour::io::{parse_csv, CsvOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for skip_invalid in [false, true] {
        let opts = CsvOptions {
            skip_invalid,
            ..CsvOptions::default()
        };
        if let Ok(loaded) = parse_csv(data, &opts) {
            assert!(loaded.dataset.len() >= 2);
            assert!(loaded.dataset.samples().iter().all(|s| s.hs >= 0.0 && s.v >= 0.0));
        }
    }
});
