use std::time::Instant;

use bellbound::bell::{build_analytic_measurements, BellFunctional};
use bellbound::seesaw::{run, run_from, SeesawConfig};
use bellbound::state::verify_state;

#[test]
fn warm_start_keeps_the_violation() {
    let f = BellFunctional::builtin_i();
    let t = Instant::now();
    let rec = run_from(&f, build_analytic_measurements(), &SeesawConfig::default(), 0).unwrap();
    assert!(t.elapsed().as_secs() < 60, "{:?}", t.elapsed());
    assert!(rec.best_value >= 2.6314e-4, "{}", rec.best_value);
    assert_eq!(rec.max_trace_decrease(), 0.0, "{:?}", rec.value_trace);
    assert!(rec.max_state_violation <= 1e-8);
    assert!(verify_state(&rec.best_state).is_valid_ppt(1e-8));
}

#[test]
fn few_cold_restarts_are_reproducible_and_monotone() {
    let f = BellFunctional::builtin_i();
    let cfg = SeesawConfig { restarts: 3, seed: 11, ..Default::default() };
    let a = run(&f, &cfg).unwrap();
    let b = run(&f, &cfg).unwrap();
    assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
    assert_eq!(a.restart_index, b.restart_index);
    assert_eq!(a.max_trace_decrease(), 0.0);
    assert!(a.best_value.is_finite());
}
