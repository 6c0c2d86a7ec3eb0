#![no_main]
use bellbound::state::{verify_state, DensityMatrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(rho) = DensityMatrix::parse_json(data) {
        if rho.dims().total() <= 16 {
            let _ = verify_state(&rho);
        }
    }
});
