#![no_main]

use libfuzzer_sys::fuzz_target;
use scratchq::io::{encode_labels_csv, parse_labels_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_labels_csv(text, "fuzz") {
        let again = encode_labels_csv(&records);
        let back = parse_labels_csv(std::str::from_utf8(&again).unwrap(), "fuzz").expect("re-parse");
        assert_eq!(back.len(), records.len());
    }
});
