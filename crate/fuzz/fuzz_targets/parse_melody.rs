#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::melody::{parse_melody, serialize_melody};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_melody(text) {
        let again = parse_melody(&serialize_melody(&m)).expect("serialized melody parses");
        assert_eq!(m, again);
    }
});
