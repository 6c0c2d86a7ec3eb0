//! Small dense semidefinite programs over direct sums of Hermitian PSD blocks.

mod ipm;
mod problem;

pub use problem::{BlockTerm, Constraint, SdpProblem, SparseHermitian};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Absolute duality-gap target.
    pub gap_tol: f64,
    /// Constraint residual target (relative to `1 + max|b|`, `1 + max|C|`).
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Solve real-data blocks in the complex embedding anyway.
    pub force_complex: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            feas_tol: 1e-10,
            max_iter: 200,
            force_complex: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    #[serde(with = "matrix_list")]
    pub primal_blocks: Vec<Matrix>,
    /// `Z = sum_m y_m A_m - C` per block.
    #[serde(with = "matrix_list")]
    pub dual_slack: Vec<Matrix>,
    pub dual_y: Vec<f64>,
    /// Primal objective `<C, X>`.
    pub objective_value: f64,
    /// Dual objective `b·y`.
    pub dual_value: f64,
    /// `dual_value - objective_value`.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    /// Constraints detected as linearly dependent and left out of the solve.
    pub dropped_constraints: Vec<usize>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Turns a non-optimal status into [`Error::Solver`].
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                detail: format!(
                    "after {} iterations: objective {:.6e}, gap {:.3e}, infeasibility {:.3e}/{:.3e}",
                    self.iterations, self.objective_value, self.gap, self.primal_infeasibility, self.dual_infeasibility
                ),
            })
        }
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string_sig17(self).expect("solution serializes")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Solves `problem`. Malformed problems are errors; numerical outcomes are
/// reported through [`SdpSolution::status`].
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    Ok(ipm::solve(problem, opts))
}

mod matrix_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Dense {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    }

    pub fn serialize<S: Serializer>(mats: &[Matrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let dense: Vec<Dense> = mats
            .iter()
            .map(|m| Dense {
                re: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).re).collect()).collect(),
                im: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).im).collect()).collect(),
            })
            .collect();
        dense.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Matrix>, D::Error> {
        let dense = Vec::<Dense>::deserialize(d)?;
        dense
            .into_iter()
            .map(|m| {
                let n = m.re.len();
                let ok = m.im.len() == n && m.re.iter().chain(&m.im).all(|r| r.len() == n);
                if !ok {
                    return Err(serde::de::Error::custom("matrix arrays must be square and matching"));
                }
                Ok(Matrix::from_fn(n, n, |i, j| C64::new(m.re[i][j], m.im[i][j])))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c};

    fn trace_one(n: usize, objective: &Matrix) -> SdpProblem {
        let mut p = SdpProblem::new(vec![n]);
        p.add_objective(0, SparseHermitian::from_matrix(objective));
        p.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(n) }], 1.0);
        p
    }

    #[test]
    fn diagonal_program() {
        let sol = solve(&trace_one(2, &Matrix::diag(&[1.0, -1.0])), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "{sol:?}");
        assert!((sol.objective_value - 1.0).abs() <= 1e-9);
        let x = &sol.primal_blocks[0];
        assert!((x.get(0, 0).re - 1.0).abs() <= 1e-8 && x.get(1, 1).re.abs() <= 1e-8);
    }

    #[test]
    fn off_diagonal_program_hits_top_eigenvalue() {
        let cmat = Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let sol = solve(&trace_one(2, &cmat), &SdpOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective_value - 1.0).abs() <= 1e-9);
        assert!(sol.dual_value >= sol.objective_value - 1e-9);
    }

    #[test]
    fn complex_objective() {
        // [[0, -i], [i, 0]] has eigenvalues ±1.
        let cmat = Matrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        let sol = solve(&trace_one(2, &cmat), &SdpOptions::default()).unwrap();
        assert!(sol.is_optimal(), "{sol:?}");
        assert!((sol.objective_value - 1.0).abs() <= 1e-9);
        let x = &sol.primal_blocks[0];
        assert!(linalg::is_psd(x, 1e-9).unwrap());
    }

    #[test]
    fn real_and_embedded_paths_agree() {
        let cmat = Matrix::from_real_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0).hermitian_part();
        let p = trace_one(4, &cmat);
        let real = solve(&p, &SdpOptions::default()).unwrap();
        let cx = solve(&p, &SdpOptions { force_complex: true, ..Default::default() }).unwrap();
        assert!(real.is_optimal() && cx.is_optimal());
        assert!((real.objective_value - cx.objective_value).abs() <= 1e-10);
    }

    #[test]
    fn dependent_constraints_are_dropped() {
        let mut p = trace_one(2, &Matrix::diag(&[1.0, 0.0]));
        p.add_constraint(vec![BlockTerm { block: 0, mat: { let mut s = SparseHermitian::identity(2); s.scale(2.0); s } }], 2.0);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.dropped_constraints, vec![1]);
        assert!(sol.is_optimal());
        assert!((sol.objective_value - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn inconsistent_dependent_constraint_is_infeasible() {
        let mut p = trace_one(2, &Matrix::diag(&[1.0, 0.0]));
        p.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(2) }], 3.0);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn infeasible_program_is_flagged() {
        // Tr X = -1 with X ⪰ 0.
        let mut p = SdpProblem::new(vec![2]);
        p.add_objective(0, SparseHermitian::identity(2));
        p.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(2) }], -1.0);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_ne!(sol.status, SdpStatus::Optimal);
        assert!(sol.require_optimal().is_err());
    }

    #[test]
    fn unbounded_program_is_flagged() {
        // maximize X_00 with only X_11 = 1 fixed.
        let mut p = SdpProblem::new(vec![2]);
        let mut obj = SparseHermitian::new(2);
        obj.push_real(0, 0, 1.0);
        p.add_objective(0, obj);
        let mut con = SparseHermitian::new(2);
        con.push_real(1, 1, 1.0);
        p.add_constraint(vec![BlockTerm { block: 0, mat: con }], 1.0);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible, "{sol:?}");
    }

    #[test]
    fn slack_block_expresses_inequality() {
        // maximize x00 s.t. Tr X = 1, x00 + s = 0.25, s ⪰ 0
        let mut p = SdpProblem::new(vec![2, 1]);
        let mut e00 = SparseHermitian::new(2);
        e00.push_real(0, 0, 1.0);
        p.add_objective(0, e00.clone());
        p.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(2) }], 1.0);
        p.add_constraint(
            vec![BlockTerm { block: 0, mat: e00 }, BlockTerm { block: 1, mat: SparseHermitian::identity(1) }],
            0.25,
        );
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective_value - 0.25).abs() <= 1e-9);
    }

    #[test]
    fn solution_json_round_trip() {
        let sol = solve(&trace_one(2, &Matrix::diag(&[1.0, -1.0])), &SdpOptions::default()).unwrap();
        let back = SdpSolution::parse_json(&sol.to_json()).unwrap();
        assert_eq!(back, sol);
    }
}
