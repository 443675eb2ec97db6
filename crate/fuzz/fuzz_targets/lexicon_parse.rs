#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::phonology::Lexicon;

// Character table and word table, separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (chars, words) = text.split_once('\0').unwrap_or((text, ""));
    let _ = Lexicon::parse(chars, words);
});
