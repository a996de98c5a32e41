#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: &str| {
    if let Ok(m) = ripcert::io::parse_factor(input) {
        assert!(m.nrows() > 0 && m.ncols() > 0);
        assert_eq!(ripcert::io::parse_factor(&ripcert::io::factor_to_json(&m)).unwrap(), m);
    }
});
