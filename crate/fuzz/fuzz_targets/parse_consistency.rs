#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::agents::parse_consistency;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((score, _)) = parse_consistency(text) {
        assert!((1..=5).contains(&score));
    }
});
