#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::melody::{import_midi, DEFAULT_GAP_THRESHOLD};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = import_midi(data, DEFAULT_GAP_THRESHOLD) {
        assert!(!m.phrases().is_empty());
    }
});
