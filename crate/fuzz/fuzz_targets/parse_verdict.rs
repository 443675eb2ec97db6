#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::agents::{parse_verdict, Decision};

// First byte is the candidate count.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let n = usize::from(n % 16);
    if let Ok(Decision::Select(i)) = parse_verdict(text, n) {
        assert!(i < n);
    }
});
