use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{ComplexVector, EigenDecomposition, HermitianOperator, Tolerances, I};
use crate::error::{QbcError, Result};

pub fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    a.dot(b)
}

fn adjoint(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

/// `max |u u^H - I|`.
pub fn unitarity_deviation(u: &Array2<Complex64>) -> f64 {
    let n = u.nrows();
    let uu = u.dot(&adjoint(u));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((uu[[i, j]] - target).norm());
        }
    }
    worst
}

/// `max |AB - BA|` for square operators of equal size.
pub fn commutator_max(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let ab = a.dot(b);
    let ba = b.dot(a);
    ab.iter().zip(ba.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `u op u^H` for unitary `u`.
pub fn conjugate(op: &HermitianOperator, u: &Array2<Complex64>) -> Result<HermitianOperator> {
    conjugate_with(op, u, &Tolerances::default())
}

pub fn conjugate_with(op: &HermitianOperator, u: &Array2<Complex64>, tol: &Tolerances) -> Result<HermitianOperator> {
    let (r, c) = u.dim();
    if r != c || r != op.dim() {
        return Err(QbcError::DimensionMismatch { expected: op.dim(), found: r.max(c) });
    }
    let deviation = unitarity_deviation(u);
    if deviation > tol.unitarity {
        return Err(QbcError::NotUnitary { deviation });
    }
    let m = u.dot(op.matrix()).dot(&adjoint(u));
    HermitianOperator::symmetrized(m, format!("conj({})", op.label()))
}

/// `exp(-i t H / hbar) v` from a full eigendecomposition of `H`.
pub fn propagate(eig: &EigenDecomposition, v: &ComplexVector, t: f64, hbar: f64) -> Result<ComplexVector> {
    let n = v.dim();
    if eig.eigenvectors.first().map_or(0, |q| q.dim()) != n {
        return Err(QbcError::DimensionMismatch {
            expected: eig.eigenvectors.first().map_or(0, |q| q.dim()),
            found: n,
        });
    }
    let mut out = Array1::<Complex64>::zeros(n);
    for (&lambda, q) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        let coeff = q.dot(v) * (-I * lambda * t / hbar).exp();
        out.scaled_add(coeff, q.as_array());
    }
    ComplexVector::new(out)
}

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Array2<Complex64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: &Array2<Complex64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(QbcError::EmptyDimension);
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n).map(|i| (i, lu[[i, k]].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return Err(QbcError::InvalidParameter("singular matrix in LU".into()));
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let pivot = lu[[k, k]];
            for i in k + 1..n {
                let f = lu[[i, k]] / pivot;
                lu[[i, k]] = f;
                if f != Complex64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let t = lu[[k, j]];
                        lu[[i, j]] -= f * t;
                    }
                }
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn solve(&self, b: &Array1<Complex64>) -> Array1<Complex64> {
        let n = self.lu.nrows();
        let mut x: Array1<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        x
    }
}

pub fn lu_solve(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    Ok(LuFactors::factor(a)?.solve(b))
}
