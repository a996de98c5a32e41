#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: &str| {
    if let Ok(inst) = ripcert::io::parse_instance(input) {
        let again = ripcert::io::parse_instance(&ripcert::io::instance_to_json(&inst)).expect("serialized instance parses");
        assert_eq!(again.operator.stacked(), inst.operator.stacked());
    }
});
