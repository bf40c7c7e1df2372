#![no_main]
use libfuzzer_sys::fuzz_target;

use qldpc_lab::stabcode::StabilizerCode;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(code) = StabilizerCode::from_json(text) {
        let again = StabilizerCode::from_json(&code.to_json()).expect("descriptor round-trips");
        assert_eq!(again.generators(), code.generators());
        assert_eq!(again.k(), code.k());
    }
});
