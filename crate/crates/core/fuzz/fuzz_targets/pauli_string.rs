#![no_main]
use libfuzzer_sys::fuzz_target;

use qldpc_lab::pauli::PauliOperator;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = text.parse::<PauliOperator>() {
        let again: PauliOperator = p.to_string().parse().unwrap();
        assert_eq!(again, p);
        assert!(p.commutes_with(&p).unwrap());
    }
});
