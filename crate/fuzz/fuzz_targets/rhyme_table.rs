#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::phonology::RhymeTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = RhymeTable::parse(text);
});
