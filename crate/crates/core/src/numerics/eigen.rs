//! Hermitian eigensolver: Householder reduction to real symmetric tridiagonal
//! form followed by implicit QL with Wilkinson-style shifts.
//!
//! Complex input is reduced directly with complex reflectors, then a diagonal
//! phase similarity makes the off-diagonal real. Real input takes the same
//! path with `f64` arithmetic. Columns that are already zero below the
//! subdiagonal are skipped, so tridiagonal input costs O(n^2).

use num_complex::Complex64;

use super::scalar::Scalar;
use super::{ComplexVector, EigenOptions, HermitianOperator, Tolerances};
use crate::error::{QbcError, Result};
use crate::exec::Execution;

/// Eigenvalues (ascending) with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `|<v_i, v_j> - δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.eigenvectors.iter().enumerate() {
            for (j, b) in self.eigenvectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).norm());
            }
        }
        worst
    }

    /// Largest `|A v - λ v|` over all pairs.
    pub fn max_residual(&self, op: &HermitianOperator) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&lambda, v)| {
                let av = op.matrix().dot(v.as_array());
                av.iter().zip(v.as_array().iter()).map(|(a, x)| (a - x * lambda).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ λ v v^H` as a dense matrix.
    pub fn reconstruct(&self) -> ndarray::Array2<Complex64> {
        let n = self.eigenvectors.first().map_or(0, |v| v.dim());
        let mut m = ndarray::Array2::<Complex64>::zeros((n, n));
        for (&lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let s = v.as_slice();
            for i in 0..n {
                let si = s[i] * lambda;
                for j in 0..n {
                    m[[i, j]] += si * s[j].conj();
                }
            }
        }
        m
    }

    /// Checks the decomposition invariants against the operator it came from.
    pub fn validate(&self, op: &HermitianOperator, tol: &Tolerances) -> Result<()> {
        if self.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(QbcError::InvalidParameter("eigenvalues not ascending".into()));
        }
        let orth = self.orthonormality_defect();
        if orth > tol.orthonormality {
            return Err(QbcError::InvalidParameter(format!("eigenvectors not orthonormal: defect {orth:.3e}")));
        }
        let bound = tol.residual * op.max_abs().max(f64::MIN_POSITIVE) * op.dim() as f64;
        let res = self.max_residual(op);
        if res > bound {
            return Err(QbcError::InvalidParameter(format!("eigen residual {res:.3e} exceeds {bound:.3e}")));
        }
        Ok(())
    }
}

pub fn hermitian_eigen(op: &HermitianOperator) -> Result<EigenDecomposition> {
    hermitian_eigen_with(op, &EigenOptions::default())
}

pub fn hermitian_eigen_with(op: &HermitianOperator, opts: &EigenOptions) -> Result<EigenDecomposition> {
    check_input(op, &opts.tolerances)?;
    let (values, vectors) =
        if op.is_real() { solve::<f64>(op, true, opts) } else { solve::<Complex64>(op, true, opts) };
    Ok(EigenDecomposition { eigenvalues: values, eigenvectors: vectors.unwrap_or_default() })
}

pub fn hermitian_eigenvalues(op: &HermitianOperator) -> Result<Vec<f64>> {
    hermitian_eigenvalues_with(op, &EigenOptions::default())
}

pub fn hermitian_eigenvalues_with(op: &HermitianOperator, opts: &EigenOptions) -> Result<Vec<f64>> {
    check_input(op, &opts.tolerances)?;
    Ok(if op.is_real() { solve::<f64>(op, false, opts).0 } else { solve::<Complex64>(op, false, opts).0 })
}

/// The `k` lowest eigenpairs. Eigenvalues come from the full QL sweep;
/// eigenvectors come from inverse iteration on the tridiagonal form, which
/// keeps large banded problems at O(k n^2) or better.
pub fn lowest_eigenpairs(op: &HermitianOperator, k: usize) -> Result<EigenDecomposition> {
    let opts = EigenOptions::default();
    check_input(op, &opts.tolerances)?;
    let k = k.min(op.dim());
    if op.is_real() {
        lowest::<f64>(op, k, &opts)
    } else {
        lowest::<Complex64>(op, k, &opts)
    }
}

fn check_input(op: &HermitianOperator, tol: &Tolerances) -> Result<()> {
    if op.dim() == 0 {
        return Err(QbcError::EmptyDimension);
    }
    // HermitianOperator validates on construction, but the tolerance may have
    // been tightened since.
    let m = op.matrix();
    let n = op.dim();
    for i in 0..n {
        for j in i..n {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > tol.hermiticity {
                return Err(QbcError::NotHermitian { row: i, col: j, deviation: d });
            }
        }
    }
    Ok(())
}

struct Reflector<T> {
    start: usize,
    v: Vec<T>,
    tau: f64,
}

struct Tridiagonal<T> {
    diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1` after the phase similarity.
    off: Vec<f64>,
    phases: Vec<T>,
    reflectors: Vec<Reflector<T>>,
}

fn load<T: Scalar>(op: &HermitianOperator) -> Vec<T> {
    op.matrix().iter().map(|&z| T::from_complex(z)).collect()
}

/// Householder reduction working on the lower triangle of `a` (row-major).
fn tridiagonalize<T: Scalar>(mut a: Vec<T>, n: usize, exec: Execution) -> Tridiagonal<T> {
    let mut reflectors = Vec::new();
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<T> = (0..m).map(|i| a[(k + 1 + i) * n + k]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let sigma = (x[0].norm_sqr() + tail).sqrt();
        let alpha = -(x[0].phase().scale(sigma));
        let mut v = x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;

        // p = tau * A22 v from the lower triangle only.
        let off = k + 1;
        let mut p = vec![T::zero(); m];
        for i in 0..m {
            let row = &a[(off + i) * n + off..(off + i) * n + off + i + 1];
            let vi = v[i];
            let mut acc = T::zero();
            for j in 0..i {
                let aij = row[j];
                acc += aij * v[j];
                p[j] += aij.conj() * vi;
            }
            acc += vi.scale(row[i].re());
            p[i] += acc;
        }
        for z in p.iter_mut() {
            *z = z.scale(tau);
        }
        let beta: f64 = v.iter().zip(&p).map(|(vi, pi)| (vi.conj() * *pi).re()).sum();
        let half = 0.5 * tau * beta;
        let w: Vec<T> = p.iter().zip(&v).map(|(pi, vi)| *pi - vi.scale(half)).collect();

        {
            let (vr, wr) = (&v, &w);
            exec.for_each_chunk(&mut a[off * n..], n, |i, row| {
                let vi = vr[i];
                let wi = wr[i];
                let seg = &mut row[off..off + i + 1];
                for (j, z) in seg.iter_mut().enumerate() {
                    *z -= vi * wr[j].conj() + wi * vr[j].conj();
                }
            });
        }
        a[off * n + k] = alpha;
        for i in 1..m {
            a[(off + i) * n + k] = T::zero();
        }
        reflectors.push(Reflector { start: off, v, tau });
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re()).collect();
    let sub: Vec<T> = (0..n.saturating_sub(1)).map(|i| a[(i + 1) * n + i]).collect();
    let mut phases = Vec::with_capacity(n);
    phases.push(T::from_re(1.0));
    for (i, e) in sub.iter().enumerate() {
        let next = phases[i] * e.phase();
        phases.push(next);
    }
    let off = sub.iter().map(|e| e.abs()).collect();
    Tridiagonal { diag, off, phases, reflectors }
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples `i` and
/// `i + 1`; it is destroyed. When `zt` is given it holds the transposed
/// eigenvector matrix (row `i` is the eigenvector of `d[i]`) and must start as
/// the identity.
fn tql(d: &mut [f64], e_in: &[f64], mut zt: Option<&mut [f64]>) {
    let n = d.len();
    if n == 0 {
        return;
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&e_in[..n - 1]);
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = zt.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

fn back_transform<T: Scalar>(tri: &Tridiagonal<T>, w: &[f64]) -> Vec<Complex64> {
    let mut u: Vec<T> = w.iter().zip(&tri.phases).map(|(&x, &p)| p.scale(x)).collect();
    for r in tri.reflectors.iter().rev() {
        let seg = &mut u[r.start..];
        let mut s = T::zero();
        for (vi, ui) in r.v.iter().zip(seg.iter()) {
            s += vi.conj() * *ui;
        }
        let s = s.scale(r.tau);
        for (vi, ui) in r.v.iter().zip(seg.iter_mut()) {
            *ui -= *vi * s;
        }
    }
    u.into_iter().map(T::to_complex).collect()
}

fn solve<T: Scalar>(
    op: &HermitianOperator,
    want_vectors: bool,
    opts: &EigenOptions,
) -> (Vec<f64>, Option<Vec<ComplexVector>>) {
    let n = op.dim();
    let tri = tridiagonalize::<T>(load(op), n, opts.execution);
    let mut d = tri.diag.clone();
    if !want_vectors {
        tql(&mut d, &tri.off, None);
        d.sort_by(f64::total_cmp);
        return (d, None);
    }
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    tql(&mut d, &tri.off, Some(&mut zt));
    let order = ascending_order(&d);
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors: Vec<Vec<Complex64>> =
        opts.execution.map(n, |j| back_transform(&tri, &zt[order[j] * n..(order[j] + 1) * n]));
    let scale = op.max_abs().max(1.0);
    tidy_clusters(&values, &mut vectors, opts.tolerances.degeneracy_gap * scale);
    let vectors = vectors.into_iter().map(|v| ComplexVector::from_vec(v).expect("eigenvectors are finite")).collect();
    (values, Some(vectors))
}

fn ascending_order(d: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order
}

/// Re-orthonormalizes each degenerate cluster in index order and fixes the
/// global phase of every vector (first component of maximal modulus made real
/// and positive).
fn tidy_clusters(values: &[f64], vectors: &mut [Vec<Complex64>], gap: f64) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] < gap {
            end += 1;
        }
        if end - start > 1 {
            gram_schmidt(&mut vectors[start..end]);
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }
}

fn gram_schmidt(vs: &mut [Vec<Complex64>]) {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        for q in done.iter() {
            let proj: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, qi) in v.iter_mut().zip(q) {
                *x -= proj * qi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-8)).copied().unwrap_or(Complex64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    for x in v.iter_mut() {
        *x *= rot;
    }
}

fn lowest<T: Scalar>(op: &HermitianOperator, k: usize, opts: &EigenOptions) -> Result<EigenDecomposition> {
    let n = op.dim();
    let tri = tridiagonalize::<T>(load(op), n, opts.execution);
    let mut d = tri.diag.clone();
    tql(&mut d, &tri.off, None);
    d.sort_by(f64::total_cmp);
    let values: Vec<f64> = d[..k].to_vec();
    let tnorm = tri
        .diag
        .iter()
        .zip(tri.off.iter().chain(std::iter::once(&0.0)))
        .map(|(a, b)| a.abs() + 2.0 * b.abs())
        .fold(1.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lambda) in values.iter().enumerate() {
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7 + j as f64).sin()).collect();
        let shift = lambda + tnorm * 1e-13;
        for _ in 0..4 {
            x = solve_shifted_tridiagonal(&tri.diag, &tri.off, shift, &x);
            // Orthogonalize against earlier vectors of nearby eigenvalues.
            for (q, &mu) in basis.iter().zip(&values) {
                if (mu - lambda).abs() < 1e-3 * tnorm {
                    let proj: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
                    for (xi, qi) in x.iter_mut().zip(q) {
                        *xi -= proj * qi;
                    }
                }
            }
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(QbcError::NonFinite("inverse iteration diverged".into()));
            }
            for xi in x.iter_mut() {
                *xi /= norm;
            }
        }
        basis.push(x);
    }
    let mut vectors: Vec<Vec<Complex64>> = opts.execution.map(k, |j| back_transform(&tri, &basis[j]));
    let scale = op.max_abs().max(1.0);
    tidy_clusters(&values, &mut vectors, opts.tolerances.degeneracy_gap * scale);
    Ok(EigenDecomposition {
        eigenvalues: values,
        eigenvectors: vectors.into_iter().map(|v| ComplexVector::from_vec(v).expect("finite")).collect(),
    })
}

/// Solves `(T - shift I) x = b` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting.
fn solve_shifted_tridiagonal(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut dd: Vec<f64> = diag.iter().map(|x| x - shift).collect();
    let mut dl: Vec<f64> = off.to_vec();
    let mut du: Vec<f64> = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut x = b.to_vec();
    let tiny = f64::EPSILON * dd.iter().map(|v| v.abs()).fold(1.0, f64::max);
    for i in 0..n.saturating_sub(1) {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i] == 0.0 {
                dd[i] = tiny;
            }
            let fact = dl[i] / dd[i];
            dl[i] = fact;
            dd[i + 1] -= fact * du[i];
            x[i + 1] -= fact * x[i];
        } else {
            let fact = dd[i] / dl[i];
            dd[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = dd[i + 1];
            dd[i + 1] = temp - fact * dd[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            x.swap(i, i + 1);
            x[i + 1] -= fact * x[i];
        }
    }
    if dd[n - 1] == 0.0 {
        dd[n - 1] = tiny;
    }
    x[n - 1] /= dd[n - 1];
    if n >= 2 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn real_op(n: usize, f: impl Fn(usize, usize) -> f64) -> HermitianOperator {
        let m = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(f(i, j), 0.0));
        HermitianOperator::new(m, "test").unwrap()
    }

    #[test]
    fn swap_matrix() {
        let op = real_op(2, |i, j| if i != j { 1.0 } else { 0.0 });
        let e = hermitian_eigen(&op).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        e.validate(&op, &Tolerances::default()).unwrap();
    }

    #[test]
    fn diagonal_is_sorted() {
        let diag = [3.0, 1.0, 2.0];
        let op = real_op(3, |i, j| if i == j { diag[i] } else { 0.0 });
        let e = hermitian_eigen(&op).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn dirichlet_stencil_closed_form() {
        let op = real_op(3, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let e = hermitian_eigenvalues(&op).unwrap();
        let s = std::f64::consts::SQRT_2;
        for (got, want) in e.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn complex_hermitian_small() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = ndarray::arr2(&[
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            [Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)],
        ]);
        let op = HermitianOperator::new(m, "c").unwrap();
        let e = hermitian_eigen(&op).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-14);
        assert!((e.eigenvalues[1] - 2.0).abs() < 1e-14);
        e.validate(&op, &Tolerances::default()).unwrap();
    }

    #[test]
    fn non_hermitian_rejected_with_location() {
        let mut m = Array2::<Complex64>::zeros((3, 3));
        m[[0, 2]] = Complex64::new(1.0, 0.0);
        let err = HermitianOperator::new(m, "bad").unwrap_err();
        match err {
            QbcError::NotHermitian { row, col, .. } => assert_eq!((row, col), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_rejected() {
        let m = Array2::<Complex64>::zeros((0, 0));
        assert!(matches!(HermitianOperator::new(m, "e"), Err(QbcError::EmptyDimension)));
    }

    #[test]
    fn degenerate_cluster_is_orthonormal() {
        // Periodic ring: eigenvalues 2 - 2cos(2πk/n), pairs degenerate.
        let n = 12;
        let op = real_op(n, |i, j| {
            let d = (i + n - j) % n;
            match d {
                0 => 2.0,
                1 => -1.0,
                d if d == n - 1 => -1.0,
                _ => 0.0,
            }
        });
        let e = hermitian_eigen(&op).unwrap();
        e.validate(&op, &Tolerances::default()).unwrap();
        assert!(e.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn lowest_pairs_match_full() {
        let n = 40;
        let op = real_op(n, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0 + (i as f64) * 0.01,
            1 => -1.0,
            _ => 0.0,
        });
        let full = hermitian_eigen(&op).unwrap();
        let low = lowest_eigenpairs(&op, 5).unwrap();
        for j in 0..5 {
            assert!((full.eigenvalues[j] - low.eigenvalues[j]).abs() < 1e-12);
            let overlap = full.eigenvectors[j].dot(&low.eigenvectors[j]).norm();
            assert!((overlap - 1.0).abs() < 1e-10, "overlap {overlap}");
        }
        assert!(low.max_residual(&op) < 1e-10);
    }

    #[test]
    fn deterministic_output() {
        let n = 9;
        let op = real_op(n, |i, j| ((i * 7 + j * 7) % 5) as f64 + if i == j { 3.0 } else { 0.0 });
        let a = hermitian_eigen(&op).unwrap();
        let b = hermitian_eigen(&op).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        for (x, y) in a.eigenvectors.iter().zip(&b.eigenvectors) {
            assert_eq!(x, y);
        }
    }
}
