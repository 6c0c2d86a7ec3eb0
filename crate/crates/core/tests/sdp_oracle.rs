use bellbound::linalg::{c, max_eigenvalue, Matrix};
use bellbound::sdp::{solve, BlockTerm, SdpOptions, SdpProblem, SparseHermitian};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(n: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).hermitian_part()
}

/// max <C, X> subject to Tr X = 1, X ⪰ 0.
fn eigen_program(cmat: &Matrix) -> SdpProblem {
    let n = cmat.rows();
    let mut p = SdpProblem::new(vec![n]);
    p.add_objective(0, SparseHermitian::from_matrix(cmat));
    p.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(n) }], 1.0);
    p
}

#[test]
fn eigenvalue_oracle_over_fifty_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SdpOptions::default();
    for k in 0..50 {
        let cmat = random_hermitian(5, &mut rng);
        let p = eigen_program(&cmat);
        let sol = solve(&p, &opts).unwrap();
        assert!(sol.is_optimal(), "instance {k}: {:?}", sol.status);
        let lmax = max_eigenvalue(&cmat).unwrap();
        assert!((sol.objective_value - lmax).abs() <= 1e-8, "instance {k}: {} vs {lmax}", sol.objective_value);
        // Weak duality and complementarity.
        assert!(sol.dual_value >= sol.objective_value - 1e-9, "instance {k}");
        let xz = sol.primal_blocks[0].inner(&sol.dual_slack[0]);
        assert!(xz >= -1e-9 && xz <= 1e-7, "instance {k}: <X,Z> = {xz}");
        assert!(p.max_constraint_residual(&sol.primal_blocks) <= 1e-9);

        let again = solve(&p, &opts).unwrap();
        assert_eq!(again.objective_value.to_bits(), sol.objective_value.to_bits(), "instance {k}");
        assert_eq!(again.iterations, sol.iterations);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn objective_scaling_covariance(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cmat = random_hermitian(4, &mut rng);
        let base = solve(&eigen_program(&cmat), &SdpOptions::default()).unwrap();
        let scaled = solve(&eigen_program(&cmat.scale(s)), &SdpOptions::default()).unwrap();
        prop_assert!(base.is_optimal() && scaled.is_optimal());
        prop_assert!((scaled.objective_value - s * base.objective_value).abs() <= 1e-8 * s.max(1.0));
    }

    #[test]
    fn shift_by_identity(seed in any::<u64>(), t in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cmat = random_hermitian(4, &mut rng);
        let mut shifted = cmat.clone();
        shifted.add_scaled(t, &Matrix::identity(4));
        let base = solve(&eigen_program(&cmat), &SdpOptions::default()).unwrap();
        let moved = solve(&eigen_program(&shifted), &SdpOptions::default()).unwrap();
        prop_assert!((moved.objective_value - base.objective_value - t).abs() <= 1e-8);
    }
}
