#![no_main]
use libfuzzer_sys::fuzz_target;

use qldpc_lab::gf2::BinaryMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = BinaryMatrix::parse_sparse(text) {
        let again = BinaryMatrix::parse_sparse(&m.to_sparse_string()).unwrap();
        assert_eq!(again, m);
        if m.rows() * m.cols() <= 4096 {
            assert!(m.rank() <= m.rows().min(m.cols()));
        }
    }
    let _ = BinaryMatrix::from_dense_str(text);
});
