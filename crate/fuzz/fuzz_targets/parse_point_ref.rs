#![no_main]

use std::sync::OnceLock;

use cmif::document::parse_document;
use cmif::partition::MarkovPartition;
use libfuzzer_sys::fuzz_target;

fn partition() -> &'static MarkovPartition {
    static P: OnceLock<MarkovPartition> = OnceLock::new();
    P.get_or_init(|| {
        let doc = parse_document(include_str!("../../crates/core/fixtures/tau_example_f.json")).unwrap();
        doc.build_partition().unwrap()
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let p = partition();
    if let Ok(r) = p.parse_ref(text) {
        assert_eq!(p.parse_ref(&p.display_ref(&r)).unwrap(), r);
        if !r.is_symbolic() {
            let _ = p.point_of_ref(&r, None);
        }
    }
});
