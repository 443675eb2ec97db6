#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::control::{extract_blocks, ExtractionRule};

// First byte picks the rule: even for fenced blocks, odd for a grid.
fuzz_target!(|data: &[u8]| {
    let Some((&sel, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let n = usize::from(sel >> 1) % 24 + 1;
    let rule = if sel & 1 == 0 {
        ExtractionRule::fenced(1..=n)
    } else {
        ExtractionRule::grid(n)
    };
    if let Ok(blocks) = extract_blocks(text, &rule) {
        assert!(!blocks.is_empty());
    }
});
