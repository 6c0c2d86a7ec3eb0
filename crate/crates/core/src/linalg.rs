//! Dense complex linear algebra on small Hermitian matrices.
//!
//! Bipartite operators use the row-major product basis: `|ij>` sits at index
//! `i * dB + j`, with Alice as the major (first) factor.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Local dimensions of a bipartite operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteDims {
    pub da: usize,
    pub db: usize,
}

impl BipartiteDims {
    pub fn new(da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 {
            return Err(Error::Dimension(format!(
                "local dimensions must be positive, got {da}x{db}"
            )));
        }
        Ok(Self { da, db })
    }

    pub fn total(&self) -> usize {
        self.da * self.db
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        let n = self.total();
        if m.rows() != n || m.cols() != n {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, bipartite structure {}x{} needs {n}x{n}",
                m.rows(),
                m.cols(),
                self.da,
                self.db
            )));
        }
        Ok(())
    }
}

/// Dense complex matrix. `real` records that every entry has zero imaginary
/// part, which lets the SDP layer use real symmetric blocks.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    data: DMatrix<C64>,
    real: bool,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{}{}", self.rows(), self.cols(), if self.real { "(real)" } else { "" })?;
        for i in 0..self.rows() {
            write!(f, "\n  [")?;
            for j in 0..self.cols() {
                let z = self.get(i, j);
                if self.real {
                    write!(f, " {:+.6e}", z.re)?;
                } else {
                    write!(f, " {:+.3e}{:+.3e}i", z.re, z.im)?;
                }
            }
            write!(f, " ]")?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
            real: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
            real: true,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_nalgebra(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_real_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            data: DMatrix::from_fn(rows, cols, |i, j| re(f(i, j))),
            real: true,
        }
    }

    /// Builds from row slices of real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        Self::from_real_fn(r, cols, |i, j| rows[i][j])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_real_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// `|v><w|`
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    /// Rank-1 projector `|v><v|` (not normalized).
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn projector_real(v: &[f64]) -> Self {
        let n = v.len();
        Self::from_real_fn(n, n, |i, j| v[i] * v[j])
    }

    /// Wraps an nalgebra matrix, detecting realness exactly.
    pub fn from_nalgebra(data: DMatrix<C64>) -> Self {
        let real = data.iter().all(|z| z.im == 0.0);
        Self { data, real }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        if value.im != 0.0 {
            self.real = false;
        }
        self.data[(i, j)] = value;
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Entries in row-major order.
    pub fn entries_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            real: self.real,
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
            real: self.real,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            data: &self.data * re(s),
            real: self.real,
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// `Re Tr(A† B)`, the real inner product on Hermitian matrices.
    pub fn inner(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M[i,j] - conj(M[j,i])|`; infinite for non-square input.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> Self {
        let data = (&self.data + self.data.adjoint()) * re(0.5);
        Self { data, real: self.real }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Apply to a vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols());
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        Matrix {
            data: &self.data + &rhs.data,
            real: self.real && rhs.real,
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        Matrix {
            data: &self.data - &rhs.data,
            real: self.real && rhs.real,
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        Matrix {
            data: &self.data * &rhs.data,
            real: self.real && rhs.real,
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix {
            data: -&self.data,
            real: self.real,
        }
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        self.data += &rhs.data;
        self.real &= rhs.real;
    }
}

impl Matrix {
    /// `self += s * rhs`
    pub fn add_scaled(&mut self, s: f64, rhs: &Matrix) {
        self.data.zip_apply(&rhs.data, |a, b| *a += b * s);
        self.real &= rhs.real;
    }
}

/// Kronecker product; block `(i, j)` equals `A[i,j] * B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut data = DMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let s = a.get(i, j);
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    data[(i * rb + k, j * cb + l)] = s * b.get(k, l);
                }
            }
        }
    }
    Matrix {
        data,
        real: a.real && b.real,
    }
}

/// Transpose on one tensor factor in the computational basis.
pub fn partial_transpose(m: &Matrix, dims: BipartiteDims, party: Party) -> Result<Matrix> {
    dims.check(m)?;
    let (da, db) = (dims.da, dims.db);
    let mut out = DMatrix::zeros(da * db, da * db);
    for i in 0..da {
        for k in 0..db {
            for j in 0..da {
                for l in 0..db {
                    let (src_r, src_c) = match party {
                        Party::B => (i * db + l, j * db + k),
                        Party::A => (j * db + k, i * db + l),
                    };
                    out[(i * db + k, j * db + l)] = m.data[(src_r, src_c)];
                }
            }
        }
    }
    Ok(Matrix {
        data: out,
        real: m.real,
    })
}

/// Reduced operator after tracing out `traced`.
pub fn partial_trace(m: &Matrix, dims: BipartiteDims, traced: Party) -> Result<Matrix> {
    dims.check(m)?;
    let (da, db) = (dims.da, dims.db);
    let out = match traced {
        Party::B => DMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m.data[(i * db + k, j * db + k)]).sum()
        }),
        Party::A => DMatrix::from_fn(db, db, |k, l| {
            (0..da).map(|i| m.data[(i * db + k, i * db + l)]).sum()
        }),
    };
    Ok(Matrix {
        data: out,
        real: m.real,
    })
}

/// `Tr(A B)`
pub fn trace_product(a: &Matrix, b: &Matrix) -> C64 {
    assert_eq!((a.cols(), a.rows()), (b.rows(), b.cols()));
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    acc
}

/// Partial trace after multiplying by `op` on the traced factor:
/// `Tr_B(M (1 ⊗ op))` for `traced = B`, `Tr_A(M (op ⊗ 1))` for `traced = A`.
pub fn contract_with(m: &Matrix, dims: BipartiteDims, traced: Party, op: &Matrix) -> Result<Matrix> {
    dims.check(m)?;
    let (da, db) = (dims.da, dims.db);
    let need = match traced {
        Party::A => da,
        Party::B => db,
    };
    if op.rows() != need || op.cols() != need {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, traced factor has dimension {need}",
            op.rows(),
            op.cols()
        )));
    }
    let data = match traced {
        Party::B => DMatrix::from_fn(da, da, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..db {
                for l in 0..db {
                    acc += m.data[(i * db + k, j * db + l)] * op.data[(l, k)];
                }
            }
            acc
        }),
        Party::A => DMatrix::from_fn(db, db, |k, l| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..da {
                for j in 0..da {
                    acc += m.data[(i * db + k, j * db + l)] * op.data[(j, i)];
                }
            }
            acc
        }),
    };
    Ok(Matrix::from_nalgebra(data))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Matrix,
}

fn hermitian_guard(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let dev = m.hermiticity_deviation();
    if dev > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

pub fn eigh(m: &Matrix) -> Result<Eigh> {
    hermitian_guard(m)?;
    let n = m.rows();
    let sym = m.hermitian_part();
    let real = sym.real;
    let eig = sym.data.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Eigh {
        values,
        vectors: Matrix {
            data: vectors,
            real,
        },
    })
}

pub fn eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    hermitian_guard(m)?;
    let mut vals: Vec<f64> = m.hermitian_part().data.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

pub fn max_eigenvalue(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.last().copied().unwrap_or(0.0))
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(m: &Matrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}
