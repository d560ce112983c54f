#![no_main]

use libfuzzer_sys::fuzz_target;
use scratchq::io::{decode_model, encode_model};

fuzz_target!(|data: &[u8]| {
    if let Ok((task, model)) = decode_model(data) {
        let again = encode_model(&model, task);
        let (task2, model2) = decode_model(&again).expect("re-encoded artifact decodes");
        assert_eq!(task, task2);
        assert_eq!(model.layers, model2.layers);
    }
});
