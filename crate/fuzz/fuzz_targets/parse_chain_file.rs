#![no_main]

use cmif::chain_file::parse_chain_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse_chain_file(text) else { return };
    // rebuilding is expensive for deep chains
    if file.depth <= 4 {
        let _ = file.load();
    }
});
