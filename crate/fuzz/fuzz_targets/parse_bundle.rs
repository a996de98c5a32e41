#![no_main]

use libfuzzer_sys::fuzz_target;
use ripcert::io::{bundle_to_json, parse_bundle};

fuzz_target!(|input: &str| {
    if let Ok(b) = parse_bundle(input) {
        // Must survive a round trip.
        let _ = parse_bundle(&bundle_to_json(&b)).unwrap();
    }
});
