#![no_main]

use libfuzzer_sys::fuzz_target;
use m2l_core::agents::AgentTrace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = AgentTrace::from_jsonl(text) {
        assert_eq!(AgentTrace::from_jsonl(&t.to_jsonl()).unwrap(), t);
    }
});
