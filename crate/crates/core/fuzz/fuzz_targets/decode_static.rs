#![no_main]
use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;

use qldpc_lab::construct::{hypergraph_product, repetition_code};
use qldpc_lab::decoder::StaticDecoder;
use qldpc_lab::gf2::BitVec;
use qldpc_lab::stabcode::StabilizerCode;

fn setup() -> &'static (StabilizerCode, StaticDecoder) {
    static S: OnceLock<(StabilizerCode, StaticDecoder)> = OnceLock::new();
    S.get_or_init(|| {
        let code = hypergraph_product(&repetition_code(3).unwrap()).unwrap();
        let dec = StaticDecoder::exact(&code);
        (code, dec)
    })
}

fuzz_target!(|data: &[u8]| {
    let (code, dec) = setup();
    let m = code.num_checks();
    let bits: Vec<bool> = (0..m)
        .map(|i| data.get(i / 8).is_some_and(|b| b >> (i % 8) & 1 == 1))
        .collect();
    let syndrome = BitVec::from_bools(&bits);
    if let Ok(c) = dec.decode(&syndrome, code.n()) {
        assert_eq!(code.syndrome(&c).unwrap(), syndrome);
    }
});
