#![no_main]
use bellbound::sdp::SdpProblem;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = SdpProblem::parse_json(data) {
        // Parsed problems are validated; keep solves cheap.
        if p.blocks.iter().sum::<usize>() <= 8 && p.constraints.len() <= 8 {
            let opts = bellbound::sdp::SdpOptions { max_iter: 30, ..Default::default() };
            let _ = bellbound::sdp::solve(&p, &opts);
        }
    }
});
