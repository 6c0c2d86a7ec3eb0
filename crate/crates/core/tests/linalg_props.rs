use bellbound::linalg::{c, eigh, kron, partial_trace, partial_transpose, BipartiteDims, Matrix, Party};
use proptest::prelude::*;

fn hermitian(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |xs| {
        let m = Matrix::from_fn(n, n, |i, j| c(xs[2 * (i * n + j)], xs[2 * (i * n + j) + 1]));
        m.hermitian_part()
    })
}

fn square(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n)
        .prop_map(move |xs| Matrix::from_fn(n, n, |i, j| c(xs[2 * (i * n + j)], xs[2 * (i * n + j) + 1])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs(m in hermitian(6)) {
        let e = eigh(&m).unwrap();
        let v = &e.vectors;
        let rebuilt = &(v * &Matrix::diag(&e.values)) * &v.adjoint();
        prop_assert!(rebuilt.max_abs_diff(&m) <= 1e-12);
        let gram = &v.adjoint() * v;
        prop_assert!(gram.max_abs_diff(&Matrix::identity(6)) <= 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn partial_transpose_of_product(a in square(3), b in square(2)) {
        let dims = BipartiteDims::new(3, 2).unwrap();
        let pt = partial_transpose(&kron(&a, &b), dims, Party::B).unwrap();
        prop_assert!(pt.max_abs_diff(&kron(&a, &b.transpose())) <= 1e-14);
        let pta = partial_transpose(&kron(&a, &b), dims, Party::A).unwrap();
        prop_assert!(pta.max_abs_diff(&kron(&a.transpose(), &b)) <= 1e-14);
    }

    #[test]
    fn partial_transpose_is_an_involution(m in square(6)) {
        let dims = BipartiteDims::new(2, 3).unwrap();
        let twice = partial_transpose(&partial_transpose(&m, dims, Party::B).unwrap(), dims, Party::B).unwrap();
        prop_assert_eq!(twice.max_abs_diff(&m), 0.0);
    }

    #[test]
    fn partial_trace_of_product(a in square(3), b in square(3)) {
        let dims = BipartiteDims::new(3, 3).unwrap();
        let rb = partial_trace(&kron(&a, &b), dims, Party::A).unwrap();
        let tr_a = a.trace();
        let expect = Matrix::from_fn(3, 3, |i, j| tr_a * b.get(i, j));
        prop_assert!(rb.max_abs_diff(&expect) <= 1e-13);
    }
}
