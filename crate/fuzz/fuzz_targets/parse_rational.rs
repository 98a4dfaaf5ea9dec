#![no_main]

use cmif::scalar::{fmt_rational, parse_rational};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_rational(text) {
        assert_eq!(parse_rational(&fmt_rational(&v)).unwrap(), v);
    }
});
