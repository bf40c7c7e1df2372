#![no_main]
use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;

use qldpc_lab::construct::{hypergraph_product, repetition_code};
use qldpc_lab::decoder::{DecoderKind, SpaceTimeDecoder};
use qldpc_lab::gf2::BitVec;
use qldpc_lab::noise::observed_syndromes;
use qldpc_lab::stabcode::StabilizerCode;

const ROUNDS: usize = 3;

fn setup() -> &'static (StabilizerCode, SpaceTimeDecoder) {
    static S: OnceLock<(StabilizerCode, SpaceTimeDecoder)> = OnceLock::new();
    S.get_or_init(|| {
        let code = hypergraph_product(&repetition_code(3).unwrap()).unwrap();
        let dec = SpaceTimeDecoder::new(&code, ROUNDS, DecoderKind::greedy_default(), 3).unwrap();
        (code, dec)
    })
}

fuzz_target!(|data: &[u8]| {
    let (code, dec) = setup();
    let m = code.num_checks();
    let deltas: Vec<BitVec> = (0..ROUNDS)
        .map(|t| {
            let bits: Vec<bool> = (0..m)
                .map(|b| {
                    let i = t * m + b;
                    data.get(i / 8).is_some_and(|x| x >> (i % 8) & 1 == 1)
                })
                .collect();
            BitVec::from_bools(&bits)
        })
        .collect();
    if let Ok(fp) = dec.deduce(&deltas) {
        assert_eq!(observed_syndromes(code, &fp).unwrap(), deltas);
    }
});
