#![no_main]
use libfuzzer_sys::fuzz_target;

use qldpc_lab::decoder::SyndromeRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = SyndromeRecord::from_json(text) {
        assert_eq!(SyndromeRecord::from_json(&rec.to_json()).unwrap(), rec);
    }
});
