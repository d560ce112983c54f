#![no_main]

use libfuzzer_sys::fuzz_target;
use scratchq::io::parse_sensor_csv;
use scratchq::signal::Channel;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_sensor_csv(text, "fuzz", Channel::ContactMic);
    }
});
