//! The PPT bound entangled two-qutrit state and its certification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, re, BipartiteDims, Matrix, Party, C64};

/// Bipartite density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: Matrix,
    dims: BipartiteDims,
}

impl DensityMatrix {
    /// Wraps a matrix after checking its shape and Hermiticity. Positivity
    /// and normalization are reported by [`verify_state`], not enforced.
    pub fn new(mat: Matrix, dims: BipartiteDims) -> Result<Self> {
        let n = dims.total();
        if mat.rows() != n || mat.cols() != n {
            return Err(Error::Dimension(format!(
                "state is {}x{}, expected {n}x{n}",
                mat.rows(),
                mat.cols()
            )));
        }
        let dev = mat.hermiticity_deviation();
        if dev > 1e-9 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { mat, dims })
    }

    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let n = dims.total();
        Self {
            mat: Matrix::identity(n).scale(1.0 / n as f64),
            dims,
        }
    }

    /// Pure state `|v><v| / <v|v>`.
    pub fn pure(v: &[C64], dims: BipartiteDims) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::Invalid("zero state vector".into()));
        }
        Self::new(Matrix::projector(v).scale(1.0 / norm2), dims)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn into_matrix(self) -> Matrix {
        self.mat
    }

    pub fn to_json(&self) -> StateJson {
        let n = self.dims.total();
        StateJson {
            dims: [self.dims.da, self.dims.db],
            re: (0..n).map(|i| (0..n).map(|j| self.mat.get(i, j).re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.mat.get(i, j).im).collect()).collect(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let dims = BipartiteDims::new(json.dims[0], json.dims[1])?;
        let n = dims
            .da
            .checked_mul(dims.db)
            .filter(|&n| n <= 4096)
            .ok_or_else(|| Error::Invalid("state dimension too large".into()))?;
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !square(&json.re) || !square(&json.im) {
            return Err(Error::Dimension(format!("state arrays must be {n}x{n}")));
        }
        let mat = Matrix::from_fn(n, n, |i, j| C64::new(json.re[i][j], json.im[i][j]));
        if mat.as_nalgebra().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("non-finite state entry".into()));
        }
        Self::new(mat, dims)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    /// Export with 17 significant digits.
    pub fn export_json(&self) -> Result<String> {
        Ok(crate::json::to_string_sig17(&self.to_json())?)
    }
}

/// `{"dims":[dA,dB], "re":[[...]], "im":[[...]]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dims: [usize; 2],
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Eigenvalues of the counterexample state, in the order of its eigenvectors.
pub fn counterexample_eigenvalues() -> [f64; 4] {
    [3257.0 / 6884.0, 450.0 / 1721.0, 450.0 / 1721.0, 27.0 / 6884.0]
}

/// The four (orthonormal) eigenvectors with nonzero weight, as length-9 real
/// amplitude vectors in the `|ij> -> 3i + j` basis.
pub fn counterexample_eigenvectors() -> [[f64; 9]; 4] {
    let idx = |i: usize, j: usize| 3 * i + j;
    let s2 = 1.0 / 2f64.sqrt();
    let s3 = 1.0 / 3f64.sqrt();
    // a / 12 with a = sqrt(131/2)
    let a12 = 262f64.sqrt() / 24.0;
    let (p60, p310) = (1.0 / 60.0, 3.0 / 10.0);

    let mut psi = [[0.0; 9]; 4];
    psi[0][idx(0, 0)] = s2;
    psi[0][idx(1, 1)] = s2;

    psi[1][idx(0, 1)] = a12;
    psi[1][idx(1, 0)] = a12;
    psi[1][idx(0, 2)] = p60;
    psi[1][idx(2, 1)] = -p310;

    psi[2][idx(0, 0)] = a12;
    psi[2][idx(1, 1)] = -a12;
    psi[2][idx(1, 2)] = p60;
    psi[2][idx(2, 0)] = p310;

    psi[3][idx(0, 1)] = -s3;
    psi[3][idx(1, 0)] = s3;
    psi[3][idx(2, 2)] = s3;
    psi
}

/// The PPT-invariant two-qutrit state, assembled from its spectral form.
pub fn build_counterexample_state() -> DensityMatrix {
    let dims = BipartiteDims { da: 3, db: 3 };
    let mut mat = Matrix::zeros(9, 9);
    for (lambda, v) in counterexample_eigenvalues().iter().zip(counterexample_eigenvectors()) {
        mat.add_scaled(*lambda, &Matrix::projector_real(&v));
    }
    DensityMatrix { mat, dims }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub trace_dev: f64,
    pub hermiticity_dev: f64,
    pub min_eig: f64,
    /// `max |PT(rho) - rho|` entrywise.
    pub pt_invariance_dev: f64,
    pub pt_min_eig: f64,
    /// Full spectrum, ascending.
    pub eigenvalues: Vec<f64>,
}

impl StateReport {
    /// Density-matrix and PPT checks at tolerance `tol`.
    pub fn is_valid_ppt(&self, tol: f64) -> bool {
        self.trace_dev <= tol && self.hermiticity_dev <= tol && self.min_eig >= -tol && self.pt_min_eig >= -tol
    }
}

pub fn verify_state(rho: &DensityMatrix) -> StateReport {
    let m = rho.matrix();
    let pt = linalg::partial_transpose(m, rho.dims, Party::B).expect("dims checked at construction");
    let sym = m.hermitian_part();
    let eigenvalues = linalg::eigenvalues(&sym).expect("symmetrized input is Hermitian");
    let pt_min_eig = linalg::min_eigenvalue(&pt.hermitian_part()).expect("symmetrized input is Hermitian");
    StateReport {
        trace_dev: (m.trace() - re(1.0)).norm(),
        hermiticity_dev: m.hermiticity_deviation(),
        min_eig: eigenvalues.first().copied().unwrap_or(0.0),
        pt_invariance_dev: pt.max_abs_diff(m),
        pt_min_eig,
        eigenvalues,
    }
}

/// `(1 - eps) rho + eps * 1 / (dA dB)`
pub fn mix_with_white_noise(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            min: 0.0,
            max: 1.0,
        });
    }
    let n = rho.dims.total();
    let mut mat = rho.mat.scale(1.0 - eps);
    mat.add_scaled(eps / n as f64, &Matrix::identity(n));
    Ok(DensityMatrix { mat, dims: rho.dims })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_is_one() {
        let rho = build_counterexample_state();
        assert!((rho.matrix().trace() - re(1.0)).norm() <= 1e-14);
        let lambda_sum: f64 = counterexample_eigenvalues().iter().sum();
        assert!((lambda_sum - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let psi = counterexample_eigenvectors();
        for i in 0..4 {
            for j in 0..4 {
                let g: f64 = psi[i].iter().zip(&psi[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() <= 1e-14, "<psi{i}|psi{j}> = {g}");
            }
        }
    }

    #[test]
    fn pt_invariant_and_ppt() {
        let r = verify_state(&build_counterexample_state());
        assert!(r.pt_invariance_dev <= 1e-12, "{r:?}");
        assert!(r.trace_dev <= 1e-12 && r.hermiticity_dev <= 1e-12);
        assert!(r.min_eig >= -1e-12 && r.pt_min_eig >= -1e-12, "{r:?}");
    }

    #[test]
    fn spectrum_matches_closed_form() {
        let r = verify_state(&build_counterexample_state());
        let mut expect = vec![0.0; 5];
        expect.extend([27.0 / 6884.0, 450.0 / 1721.0, 450.0 / 1721.0, 3257.0 / 6884.0]);
        for (g, e) in r.eigenvalues.iter().zip(&expect) {
            assert!((g - e).abs() <= 1e-12, "{g} vs {e}");
        }
        assert_eq!(r.eigenvalues.iter().filter(|&&x| x > 1e-8).count(), 4);
    }

    #[test]
    fn construction_is_deterministic() {
        let a = build_counterexample_state();
        let b = build_counterexample_state();
        let bits = |m: &Matrix| m.entries_row_major().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(a.matrix()), bits(b.matrix()));
        assert!(a.matrix().is_real());
    }

    #[test]
    fn maximally_mixed_is_pt_invariant() {
        let r = verify_state(&DensityMatrix::maximally_mixed(BipartiteDims { da: 3, db: 3 }));
        assert_eq!(r.pt_invariance_dev, 0.0);
    }

    #[test]
    fn embedded_bell_pair_is_npt() {
        // (|00> + |11>)/sqrt2 inside 3x3; PT has eigenvalue -1/2 (oracle: swap-operator spectrum).
        let mut v = vec![C64::new(0.0, 0.0); 9];
        v[0] = re(1.0);
        v[4] = re(1.0);
        let rho = DensityMatrix::pure(&v, BipartiteDims { da: 3, db: 3 }).unwrap();
        let r = verify_state(&rho);
        assert!((r.pt_min_eig + 0.5).abs() <= 1e-12, "{}", r.pt_min_eig);
    }

    #[test]
    fn noise_endpoints() {
        let rho = build_counterexample_state();
        assert_eq!(mix_with_white_noise(&rho, 0.0).unwrap().matrix(), rho.matrix());
        let full = mix_with_white_noise(&rho, 1.0).unwrap();
        assert!(full.matrix().max_abs_diff(&Matrix::identity(9).scale(1.0 / 9.0)) <= 1e-16);
        assert!(mix_with_white_noise(&rho, 1.5).is_err());
        assert!(mix_with_white_noise(&rho, -0.1).is_err());
        assert!(mix_with_white_noise(&rho, f64::NAN).is_err());
    }

    #[test]
    fn noise_preserves_ppt() {
        let rho = build_counterexample_state();
        for eps in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let r = verify_state(&mix_with_white_noise(&rho, eps).unwrap());
            assert!(r.pt_min_eig >= -1e-10, "eps={eps}: {}", r.pt_min_eig);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let rho = build_counterexample_state();
        let text = rho.export_json().unwrap();
        assert!(text.contains("\"dims\""));
        let back = DensityMatrix::parse_json(&text).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn json_rejects_malformed() {
        assert!(DensityMatrix::parse_json(r#"{"dims":[3,3],"re":[[1]],"im":[[0]]}"#).is_err());
        assert!(DensityMatrix::parse_json(r#"{"dims":[0,3],"re":[],"im":[]}"#).is_err());
        assert!(DensityMatrix::parse_json(r#"{"dims":[1,2],"re":[[1,1],[0,0]],"im":[[0,0],[0,0]]}"#).is_err());
    }
}
