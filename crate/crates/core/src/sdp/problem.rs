use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};

/// Sparse Hermitian matrix stored by its upper triangle. Repeated positions
/// add up; diagonal entries must be real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseHermitian {
    pub dim: usize,
    /// `(row, col, value)` with `row <= col`.
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `value` at `(i, j)` and `conj(value)` at `(j, i)`. Off-diagonal
    /// pushes with `i > j` are stored conjugated on the upper triangle.
    pub fn push(&mut self, i: usize, j: usize, value: C64) {
        if value == C64::new(0.0, 0.0) {
            return;
        }
        if i <= j {
            self.entries.push((i, j, value));
        } else {
            self.entries.push((j, i, value.conj()));
        }
    }

    pub fn push_real(&mut self, i: usize, j: usize, value: f64) {
        self.push(i, j, C64::new(value, 0.0));
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::new(dim);
        for i in 0..dim {
            m.push_real(i, i, 1.0);
        }
        m
    }

    /// Upper-triangle nonzeros of a Hermitian matrix (lower triangle ignored).
    pub fn from_matrix(m: &Matrix) -> Self {
        let mut s = Self::new(m.rows());
        for i in 0..m.rows() {
            for j in i..m.cols() {
                let mut v = m.get(i, j);
                if i == j {
                    v.im = 0.0;
                }
                s.push(i, j, v);
            }
        }
        s
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            if i == j {
                m.set(i, i, m.get(i, i) + C64::new(v.re, 0.0));
            } else {
                m.set(i, j, m.get(i, j) + v);
                m.set(j, i, m.get(j, i) + v.conj());
            }
        }
        m
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im == 0.0)
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.2 *= s;
        }
    }

    /// `Re Tr(self * x)` for Hermitian `x`.
    pub fn inner(&self, x: &Matrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v.re * x.get(i, i).re
                } else {
                    // v x_ji + conj(v) x_ij = 2 Re(v x_ji)
                    2.0 * (v * x.get(j, i)).re
                }
            })
            .sum()
    }

    fn validate(&self, expect_dim: usize, what: &str) -> Result<()> {
        if self.dim != expect_dim {
            return Err(Error::Dimension(format!("{what}: size {} vs block size {expect_dim}", self.dim)));
        }
        for &(i, j, v) in &self.entries {
            if i > j || j >= self.dim {
                return Err(Error::Invalid(format!("{what}: entry ({i},{j}) outside the upper triangle")));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Invalid(format!("{what}: non-finite entry")));
            }
            if i == j && v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                return Err(Error::NotHermitian(v.im.abs()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockTerm {
    pub block: usize,
    pub mat: SparseHermitian,
}

/// `sum_k <A_{m,k}, X_k> = rhs`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub terms: Vec<BlockTerm>,
    pub rhs: f64,
}

/// `maximize sum_k <C_k, X_k>` subject to equality constraints, every `X_k`
/// Hermitian PSD.
///
/// The dual is `minimize b·y` subject to `sum_m y_m A_m - C ⪰ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<BlockTerm>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>) -> Self {
        Self {
            blocks,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_objective(&mut self, block: usize, mat: SparseHermitian) {
        self.objective.push(BlockTerm { block, mat });
    }

    pub fn add_constraint(&mut self, terms: Vec<BlockTerm>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::Invalid("SDP needs at least one block, all of positive size".into()));
        }
        if self.blocks.iter().any(|&n| n > 4096) {
            return Err(Error::Invalid("SDP block larger than 4096".into()));
        }
        let check = |t: &BlockTerm, what: &str| -> Result<()> {
            let n = *self
                .blocks
                .get(t.block)
                .ok_or_else(|| Error::Invalid(format!("{what}: block {} does not exist", t.block)))?;
            t.mat.validate(n, what)
        };
        for t in &self.objective {
            check(t, "objective")?;
        }
        for (m, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::Invalid(format!("constraint {m}: non-finite right-hand side")));
            }
            for t in &c.terms {
                check(t, &format!("constraint {m}"))?;
            }
        }
        Ok(())
    }

    /// `sum_k <C_k, X_k>`
    pub fn objective_at(&self, x: &[Matrix]) -> f64 {
        self.objective.iter().map(|t| t.mat.inner(&x[t.block])).sum()
    }

    /// `max_m |A_m(X) - b_m|`
    pub fn max_constraint_residual(&self, x: &[Matrix]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.terms.iter().map(|t| t.mat.inner(&x[t.block])).sum::<f64>() - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Every block's data is real.
    pub fn is_real(&self) -> bool {
        self.objective.iter().all(|t| t.mat.is_real())
            && self.constraints.iter().flat_map(|c| &c.terms).all(|t| t.mat.is_real())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("problem serializes")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn sparse_round_trip_and_inner() {
        let m = Matrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(i as f64 + 1.0, 0.0)
            } else if i < j {
                c(0.5, i as f64 - j as f64)
            } else {
                c(0.5, -(j as f64 - i as f64))
            }
        });
        assert!(m.is_hermitian(0.0));
        let s = SparseHermitian::from_matrix(&m);
        assert_eq!(s.to_matrix(), m);
        let x = Matrix::from_fn(3, 3, |i, j| c((i + j) as f64, i as f64 - j as f64));
        assert!((s.inner(&x) - m.inner(&x)).abs() <= 1e-14);
    }

    #[test]
    fn lower_pushes_are_conjugated() {
        let mut s = SparseHermitian::new(2);
        s.push(1, 0, c(1.0, 2.0));
        assert_eq!(s.entries, vec![(0, 1, c(1.0, -2.0))]);
        assert_eq!(s.to_matrix().get(1, 0), c(1.0, 2.0));
    }

    #[test]
    fn validation_catches_bad_input() {
        let mut p = SdpProblem::new(vec![2]);
        p.add_objective(1, SparseHermitian::identity(2));
        assert!(p.validate().is_err());
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(3) }], 1.0);
        assert!(p.validate().is_err());
        let bad = r#"{"blocks":[2],"objective":[{"block":0,"mat":{"dim":2,"entries":[[1,0,[1.0,0.0]]]}}],"constraints":[]}"#;
        assert!(SdpProblem::parse_json(bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut p = SdpProblem::new(vec![2, 1]);
        p.add_objective(0, SparseHermitian::from_matrix(&Matrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0)).hermitian_part()));
        p.add_constraint(
            vec![
                BlockTerm { block: 0, mat: SparseHermitian::identity(2) },
                BlockTerm { block: 1, mat: SparseHermitian::identity(1) },
            ],
            1.0,
        );
        assert_eq!(SdpProblem::parse_json(&p.to_json()).unwrap(), p);
    }
}
