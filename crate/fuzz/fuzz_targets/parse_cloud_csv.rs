#![no_main]

use cmif::inverse_limit::{parse_cloud_csv, write_cloud_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cloud) = parse_cloud_csv(text) else { return };
    if cloud.tuples.iter().all(|t| t.len() == cloud.depth) {
        let again = parse_cloud_csv(&write_cloud_csv(&cloud).unwrap()).unwrap();
        assert_eq!(again.tuples, cloud.tuples);
    }
});
