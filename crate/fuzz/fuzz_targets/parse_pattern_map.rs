#![no_main]

use std::sync::{Arc, OnceLock};

use cmif::document::parse_document;
use cmif::partition::MarkovPartition;
use cmif::pattern::{parse_pattern_map, PatternMap};
use libfuzzer_sys::fuzz_target;

fn partition() -> Arc<MarkovPartition> {
    static P: OnceLock<Arc<MarkovPartition>> = OnceLock::new();
    P.get_or_init(|| {
        let doc = parse_document(include_str!("../../crates/core/fixtures/tau_example_f.json")).unwrap();
        Arc::new(doc.build_partition().unwrap())
    })
    .clone()
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse_pattern_map(text) else { return };
    if let Ok(tau) = PatternMap::from_file(&file, partition(), partition()) {
        let back = PatternMap::from_file(&tau.to_file(), partition(), partition()).unwrap();
        assert_eq!(back, tau);
    }
});
