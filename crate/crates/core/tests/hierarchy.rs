use bellbound::bell::{behavior, build_analytic_measurements, BellFunctional, Behavior};
use bellbound::hierarchy::{
    build_structure, guessing_probability, guessing_probability_with, upper_bound, HierarchyOptions,
};
use bellbound::linalg::min_eigenvalue;
use bellbound::state::build_counterexample_state;
use bellbound::Party;

fn counterexample_behavior() -> Behavior {
    let (ma, mb) = build_analytic_measurements();
    behavior(&build_counterexample_state(), &ma, &mb).unwrap()
}

#[test]
fn bounds_contain_counterexample_and_tighten() {
    let f = BellFunctional::builtin_i();
    let rho = build_counterexample_state();
    let (ma, mb) = build_analytic_measurements();
    let opts = HierarchyOptions::default();
    let mut previous = f64::INFINITY;
    for level in 1..=2 {
        let r = upper_bound(&f, level, &opts).unwrap();
        assert!(r.bound >= 2.63144e-4, "level {level}: {}", r.bound);
        assert!(r.bound <= previous + 1e-9, "level {level}: {} after {previous}", r.bound);
        previous = r.bound;

        // The explicit assignment is feasible, including the PT block.
        let st = build_structure(&f.scenario, level).unwrap();
        let v = st.assignment(&rho, &ma, &mb).unwrap();
        for pt in [false, true] {
            let m = st.moment_matrix(&v, 1.0, pt);
            assert!(min_eigenvalue(&m).unwrap() >= -1e-10, "level {level} pt {pt}");
        }
    }
}

#[test]
fn real_moments_do_not_change_the_bound() {
    let f = BellFunctional::builtin_i();
    let a = upper_bound(&f, 1, &HierarchyOptions::default()).unwrap().bound;
    let b = upper_bound(&f, 1, &HierarchyOptions { real_moments: true, ..Default::default() }).unwrap().bound;
    assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
}

#[test]
fn chsh_with_ppt_stays_near_local_bound() {
    // Probe only: recorded, with a loose check against gross errors.
    let r = upper_bound(&BellFunctional::chsh(), 1, &HierarchyOptions::default()).unwrap();
    eprintln!("CHSH level 1 with PT block: {:.10}", r.bound);
    assert!(r.bound <= 2.0 * 2f64.sqrt());
}

#[test]
fn bob_randomness_is_valid_and_monotone() {
    let beh = counterexample_behavior();
    for y in 0..2 {
        let mode = (0..beh.scenario().bob[y]).map(|b| beh.bob_marginal(b, y)).fold(0.0, f64::max);
        let (pg1, h1) = guessing_probability(&beh, y, 1).unwrap();
        let (pg2, h2) = guessing_probability(&beh, y, 2).unwrap();
        assert!(pg1 >= mode - 1e-9 && pg2 >= mode - 1e-9, "y={y}: {pg1} {pg2} mode {mode}");
        assert!(h2 >= h1 - 1e-9, "y={y}: {h1} then {h2}");
        let cap = [4.2320e-4, 3.6191e-4][y] + 5e-6;
        assert!(h1 <= cap && h2 <= cap, "y={y}: {h1} {h2}");
    }
}

#[test]
fn alice_outcomes_are_predictable() {
    let beh = counterexample_behavior();
    for x in 0..3 {
        let r = guessing_probability_with(&beh, Party::A, x, 1, &HierarchyOptions::guessing()).unwrap();
        assert!(r.p_guess >= 1.0 - 1e-4, "x={x}: {}", r.p_guess);
    }
}
