#![no_main]
use libfuzzer_sys::fuzz_target;

use qldpc_lab::noise::FaultPath;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(fp) = FaultPath::from_json(text) {
        let again = FaultPath::from_json(&fp.to_json()).unwrap();
        assert_eq!(again, fp);
        let _ = fp.weight();
        let _ = fp.locations();
    }
});
