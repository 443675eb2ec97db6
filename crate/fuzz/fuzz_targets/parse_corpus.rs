#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::metrics::{parse_corpus, parse_record, serialize_record};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_corpus(text);
    for line in text.lines() {
        if let Ok(r) = parse_record(line) {
            assert_eq!(parse_record(&serialize_record(&r)).as_ref(), Ok(&r));
        }
    }
});
