#![no_main]
use bellbound::bell::BellFunctional;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(f) = BellFunctional::parse_json(data) {
        let again = BellFunctional::parse_json(&f.to_json()).expect("serialized functional parses");
        assert_eq!(f, again);
    }
});
