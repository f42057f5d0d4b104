//! Dense complex Hermitian linear algebra and scalar root finding.

mod eigen;
mod linalg;
mod roots;
mod scalar;

pub use eigen::{
    hermitian_eigen, hermitian_eigen_with, hermitian_eigenvalues, hermitian_eigenvalues_with, lowest_eigenpairs,
    EigenDecomposition,
};
pub use linalg::{
    commutator_max, conjugate, conjugate_with, lu_solve, matmul, max_abs, propagate, unitarity_deviation, LuFactors,
};
pub use roots::bisection_root;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{QbcError, Result};
use crate::exec::Execution;

/// Shorthand for the imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical tolerances. Defaults follow the contract of each operation; all
/// of them can be overridden (the CLI scales them with `--tol-scale`).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub orthonormality: f64,
    pub residual: f64,
    pub unitarity: f64,
    /// Eigenvalues closer than this (times `max(1, |A|_max)`) form a cluster
    /// that is re-orthonormalized in index order.
    pub degeneracy_gap: f64,
    pub commutator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: 1e-12,
            orthonormality: 1e-10,
            residual: 1e-9,
            unitarity: 1e-10,
            degeneracy_gap: 1e-9,
            commutator: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            hermiticity: self.hermiticity * factor,
            orthonormality: self.orthonormality * factor,
            residual: self.residual * factor,
            unitarity: self.unitarity * factor,
            degeneracy_gap: self.degeneracy_gap * factor,
            commutator: self.commutator * factor,
        }
    }
}

/// A finite complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Array1<Complex64>);

impl ComplexVector {
    pub fn new(entries: Array1<Complex64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QbcError::NonFinite(format!("vector entry {i} = {}", entries[i])));
        }
        Ok(ComplexVector(entries))
    }

    pub fn from_vec(entries: Vec<Complex64>) -> Result<Self> {
        Self::new(Array1::from(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector(Array1::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_array(&self) -> &Array1<Complex64> {
        &self.0
    }

    pub fn into_array(self) -> Array1<Complex64> {
        self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.0.as_slice().expect("ComplexVector is contiguous")
    }

    /// Unweighted inner product `<self, other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &ComplexVector) -> Complex64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Inner product with quadrature weights.
    pub fn weighted_dot(&self, other: &ComplexVector, weights: &[f64]) -> Complex64 {
        self.0.iter().zip(other.0.iter()).zip(weights).map(|((a, b), w)| a.conj() * b * *w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn weighted_norm(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// A dense complex Hermitian matrix with a free-text label.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: Array2<Complex64>,
    label: String,
}

impl HermitianOperator {
    /// Validates Hermiticity at the default tolerance.
    pub fn new(matrix: Array2<Complex64>, label: impl Into<String>) -> Result<Self> {
        Self::with_tolerance(matrix, label, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(matrix: Array2<Complex64>, label: impl Into<String>, tol: f64) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows == 0 {
            return Err(QbcError::EmptyDimension);
        }
        if rows != cols {
            return Err(QbcError::DimensionMismatch { expected: rows, found: cols });
        }
        if let Some(z) = matrix.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QbcError::NonFinite(format!("matrix entry {z}")));
        }
        let (row, col, deviation) = hermiticity_defect(&matrix);
        if deviation > tol {
            return Err(QbcError::NotHermitian { row, col, deviation });
        }
        Ok(HermitianOperator { matrix, label: label.into() })
    }

    /// Builds from a real symmetric matrix given row-major.
    pub fn from_real(n: usize, entries: &[f64], label: impl Into<String>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(QbcError::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        let m = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(entries[i * n + j], 0.0));
        Self::new(m, label)
    }

    /// Symmetrizes `(m + m^H)/2` before wrapping; used after products that
    /// are Hermitian in exact arithmetic.
    pub(crate) fn symmetrized(mut m: Array2<Complex64>, label: impl Into<String>) -> Result<Self> {
        let n = m.nrows();
        for i in 0..n {
            m[[i, i]].im = 0.0;
            for j in 0..i {
                let avg = 0.5 * (m[[i, j]] + m[[j, i]].conj());
                m[[i, j]] = avg;
                m[[j, i]] = avg.conj();
            }
        }
        Self::new(m, label)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[[i, j]]
    }

    /// `true` when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.dim() != self.dim() {
            return Err(QbcError::DimensionMismatch { expected: self.dim(), found: v.dim() });
        }
        ComplexVector::new(self.matrix.dot(v.as_array()))
    }

    /// Largest entrywise deviation `|self - other|_max`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(QbcError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Kronecker product `small ⊗ self` where `small` is a 2×2 block.
    pub fn kron_left(&self, small: [[Complex64; 2]; 2], label: impl Into<String>) -> Result<Self> {
        let n = self.dim();
        let m = Array2::from_shape_fn((2 * n, 2 * n), |(i, j)| small[i / n][j / n] * self.matrix[[i % n, j % n]]);
        Self::new(m, label)
    }
}

/// Largest `|a_ij - conj(a_ji)|` and where it occurs.
fn hermiticity_defect(m: &Array2<Complex64>) -> (usize, usize, f64) {
    let n = m.nrows();
    let mut worst = (0, 0, 0.0);
    for i in 0..n {
        for j in i..n {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > worst.2 {
                worst = (i, j, d);
            }
        }
    }
    worst
}

/// Options for the eigensolver.
#[derive(Debug, Clone, Copy, Default)]
pub struct EigenOptions {
    pub tolerances: Tolerances,
    pub execution: Execution,
}
