use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// One party's POVMs, indexed `[setting][outcome]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub dim: usize,
    pub povms: Vec<Vec<Matrix>>,
}

impl MeasurementSet {
    /// Checks operator shapes only; see [`MeasurementSet::validity_deviation`].
    pub fn new(dim: usize, povms: Vec<Vec<Matrix>>) -> Result<Self> {
        for (x, povm) in povms.iter().enumerate() {
            if povm.len() < 2 {
                return Err(Error::Invalid(format!("setting {x} has {} outcomes", povm.len())));
            }
            if let Some(m) = povm.iter().find(|m| m.rows() != dim || m.cols() != dim) {
                return Err(Error::Dimension(format!(
                    "setting {x}: operator is {}x{}, local dimension is {dim}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self { dim, povms })
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.povms.iter().map(Vec::len).collect()
    }

    pub fn is_real(&self) -> bool {
        self.povms.iter().flatten().all(Matrix::is_real)
    }

    /// Worst of: negative eigenvalue magnitude, Hermiticity defect, and
    /// entrywise completeness defect `|sum_a M_a - 1|`.
    pub fn validity_deviation(&self) -> f64 {
        let id = Matrix::identity(self.dim);
        let mut dev: f64 = 0.0;
        for povm in &self.povms {
            let mut sum = Matrix::zeros(self.dim, self.dim);
            for m in povm {
                dev = dev.max(m.hermiticity_deviation());
                let min = linalg::min_eigenvalue(&m.hermitian_part()).unwrap_or(f64::NEG_INFINITY);
                dev = dev.max(-min);
                sum += m;
            }
            dev = dev.max(sum.max_abs_diff(&id));
        }
        dev
    }

    /// Complex conjugate of every operator.
    pub fn conjugate(&self) -> Self {
        Self {
            dim: self.dim,
            povms: self
                .povms
                .iter()
                .map(|p| p.iter().map(|m| m.adjoint().transpose()).collect())
                .collect(),
        }
    }
}

/// Rank-1 real projective measurements on a qutrit pair yielding the
/// analytic violation: Alice `M_{0|x} = |A_x><A_x|` with `p = 1/5`,
/// Bob's ternary setting from two orthonormal vectors plus completion, and
/// Bob's binary setting `|2><2|` versus its complement.
pub fn build_analytic_measurements() -> (MeasurementSet, MeasurementSet) {
    let p: f64 = 1.0 / 5.0;
    let r3 = 3f64.sqrt();
    let q = (1.0 - 4.0 * p * p).sqrt();
    let alice_vectors = [[-p, r3 * p, q], [2.0 * p, 0.0, q], [-p, -r3 * p, q]];
    let id = Matrix::identity(3);
    let alice = alice_vectors
        .iter()
        .map(|v| {
            let m0 = Matrix::projector_real(v);
            let m1 = &id - &m0;
            vec![m0, m1]
        })
        .collect();

    let b00 = [0.0, (2.0f64 / 3.0).sqrt(), 1.0 / r3];
    let b01 = [-1.0 / 2f64.sqrt(), -1.0 / 6f64.sqrt(), 1.0 / r3];
    let m00 = Matrix::projector_real(&b00);
    let m10 = Matrix::projector_real(&b01);
    let m20 = &(&id - &m00) - &m10;
    let m01 = Matrix::projector_real(&[0.0, 0.0, 1.0]);
    let m11 = &id - &m01;
    let bob = vec![vec![m00, m10, m20], vec![m01, m11]];

    (
        MeasurementSet { dim: 3, povms: alice },
        MeasurementSet { dim: 3, povms: bob },
    )
}
