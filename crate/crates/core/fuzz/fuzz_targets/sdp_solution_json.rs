#![no_main]
use bellbound::sdp::SdpSolution;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = SdpSolution::parse_json(text);
    }
});
