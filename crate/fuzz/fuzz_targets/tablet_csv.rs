#![no_main]

use libfuzzer_sys::fuzz_target;
use scratchq::io::parse_tablet_csv;
use scratchq::labeling::{label_block, LabelConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(stream) = parse_tablet_csv(text, "fuzz") else { return };
    // whatever parses must also label without panicking
    if let (Some(&t0), Some(&t1)) = (stream.t.first(), stream.t.last()) {
        if let Ok(trace) = stream.block(t0, (t1 - t0).clamp(1.0, 20.0)) {
            let _ = label_block(&trace, &LabelConfig::default());
        }
    }
});
