//! Bell scenarios: functionals, measurements, behaviors, the exact local
//! bound and Bell operators.

mod functional;
mod local;
mod measurement;
mod scenario;

pub use functional::{evaluate, AliceTerm, BellFunctional, BobTerm, JointTerm};
pub use local::{local_bound, DeterministicStrategy, LocalBound, ENUMERATION_LIMIT, MAXIMIZER_LIST_LIMIT};
pub use measurement::{build_analytic_measurements, MeasurementSet};
pub use scenario::{Behavior, Scenario};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, trace_product, Matrix, Party};
use crate::state::DensityMatrix;

fn check_dims(rho: &DensityMatrix, ma: &MeasurementSet, mb: &MeasurementSet) -> Result<()> {
    let d = rho.dims();
    if d.da != ma.dim || d.db != mb.dim {
        return Err(Error::Dimension(format!(
            "state is {}x{}, measurements act on {} and {}",
            d.da, d.db, ma.dim, mb.dim
        )));
    }
    Ok(())
}

/// `p(ab|xy) = Tr(rho M_{a|x} ⊗ M_{b|y})`
pub fn behavior(rho: &DensityMatrix, ma: &MeasurementSet, mb: &MeasurementSet) -> Result<Behavior> {
    check_dims(rho, ma, mb)?;
    let scenario = Scenario::new(ma.outcome_counts(), mb.outcome_counts())?;
    // Tr_B(rho (1 ⊗ M_{b|y})) once per Bob operator.
    let reduced: Vec<Vec<Matrix>> = mb
        .povms
        .iter()
        .map(|povm| {
            povm.iter()
                .map(|m| linalg::contract_with(rho.matrix(), rho.dims(), Party::B, m))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(Behavior::from_fn(&scenario, |a, b, x, y| {
        trace_product(&ma.povms[x][a], &reduced[y][b]).re
    }))
}

/// `sum c_{ab|xy} M_{a|x} ⊗ M_{b|y} + sum c_{a,x} M_{a|x} ⊗ 1 + sum c_{b,y} 1 ⊗ M_{b|y}`
pub fn bell_operator(f: &BellFunctional, ma: &MeasurementSet, mb: &MeasurementSet) -> Result<Matrix> {
    f.validate()?;
    if ma.outcome_counts() != f.scenario.alice || mb.outcome_counts() != f.scenario.bob {
        return Err(Error::Scenario(format!(
            "measurements have outcomes {:?}/{:?}, functional expects {:?}/{:?}",
            ma.outcome_counts(),
            mb.outcome_counts(),
            f.scenario.alice,
            f.scenario.bob
        )));
    }
    let (da, db) = (ma.dim, mb.dim);
    let mut op = Matrix::zeros(da * db, da * db);
    for t in &f.joint {
        op.add_scaled(t.c, &kron(&ma.povms[t.x][t.a], &mb.povms[t.y][t.b]));
    }
    let id_b = Matrix::identity(db);
    for t in &f.alice_marginal {
        op.add_scaled(t.c, &kron(&ma.povms[t.x][t.a], &id_b));
    }
    let id_a = Matrix::identity(da);
    for t in &f.bob_marginal {
        op.add_scaled(t.c, &kron(&id_a, &mb.povms[t.y][t.b]));
    }
    Ok(op)
}

/// `(-3386 + 18 sqrt42 - 5 sqrt131 + 45 sqrt5502) / 43025`, the value of the
/// built-in inequality on the counterexample state with analytic measurements.
pub fn analytic_violation_closed_form() -> f64 {
    (-3386.0 + 18.0 * 42f64.sqrt() - 5.0 * 131f64.sqrt() + 45.0 * 5502f64.sqrt()) / 43025.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BipartiteDims;
    use crate::state::build_counterexample_state;

    #[test]
    fn maximally_mixed_gives_product_behavior() {
        let (ma, mb) = build_analytic_measurements();
        let rho = DensityMatrix::maximally_mixed(BipartiteDims { da: 3, db: 3 });
        let beh = behavior(&rho, &ma, &mb).unwrap();
        for x in 0..3 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..mb.povms[y].len() {
                        let expect = ma.povms[x][a].trace().re * mb.povms[y][b].trace().re / 9.0;
                        assert!((beh.p(a, b, x, y) - expect).abs() <= 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_behavior_is_normalized_and_nonsignaling() {
        let (ma, mb) = build_analytic_measurements();
        let beh = behavior(&build_counterexample_state(), &ma, &mb).unwrap();
        assert!(beh.normalization_deviation() <= 1e-12);
        assert!(beh.signaling_deviation() <= 1e-10);
        assert!(beh.min_probability() >= -1e-12);
    }

    #[test]
    fn analytic_violation_matches_closed_form() {
        let (ma, mb) = build_analytic_measurements();
        let beh = behavior(&build_counterexample_state(), &ma, &mb).unwrap();
        let v = evaluate(&BellFunctional::builtin_i(), &beh).unwrap();
        assert!((v - analytic_violation_closed_form()).abs() <= 1e-12, "{v}");
        assert!((v - 2.63144e-4).abs() <= 1e-9, "{v}");
    }

    #[test]
    fn bell_operator_expectation_equals_value() {
        let f = BellFunctional::builtin_i();
        let (ma, mb) = build_analytic_measurements();
        let rho = build_counterexample_state();
        let op = bell_operator(&f, &ma, &mb).unwrap();
        assert!(op.is_real() && op.hermiticity_deviation() == 0.0);
        let direct = evaluate(&f, &behavior(&rho, &ma, &mb).unwrap()).unwrap();
        let via_op = trace_product(&op, rho.matrix()).re;
        assert!((direct - via_op).abs() <= 1e-12);
    }

    #[test]
    fn top_eigenvector_dominates_state_value() {
        let f = BellFunctional::builtin_i();
        let (ma, mb) = build_analytic_measurements();
        let op = bell_operator(&f, &ma, &mb).unwrap();
        let e = linalg::eigh(&op).unwrap();
        let v = e.vectors.column(8);
        let top = DensityMatrix::pure(&v, BipartiteDims { da: 3, db: 3 }).unwrap();
        let value = trace_product(&op, top.matrix()).re;
        assert!((value - e.values[8]).abs() <= 1e-12);
        assert!(value >= 2.63144e-4);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (ma, mb) = build_analytic_measurements();
        let rho = DensityMatrix::maximally_mixed(BipartiteDims { da: 2, db: 3 });
        assert!(matches!(behavior(&rho, &ma, &mb), Err(Error::Dimension(_))));
        assert!(bell_operator(&BellFunctional::chsh(), &ma, &mb).is_err());
    }
}
