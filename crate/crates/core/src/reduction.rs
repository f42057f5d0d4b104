//! Reduction of parity-invariant circle operators to the interval `[0, π]`.
//!
//! A circle grid with `2N` nodes is matched with the interval grid of `N`
//! cells. The even sector maps onto all `N + 1` interval nodes, the odd
//! sector onto the `N - 1` interior nodes (odd states vanish at `0` and `π`).
//! In coefficient coordinates both maps are exact isometries, so the reduced
//! circle Laplacian coincides with the Neumann and Dirichlet matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbcError, Result};
use crate::grids::{parity_permutation, Grid, GridKind};
use crate::numerics::{commutator_max, ComplexVector, HermitianOperator, Tolerances};
use crate::operators::{build_parity_operator, build_spinor_parity, check_unit_axis};

/// Sparse row: `(column, coefficient)` pairs.
type Row = Vec<(usize, Complex64)>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

/// One parity eigenspace of a circle grid together with its isometry onto
/// interval coefficients.
#[derive(Debug, Clone)]
pub struct ParitySector {
    sign: Sign,
    circle: Grid,
    interval: Grid,
    rows: Vec<Row>,
}

impl ParitySector {
    pub fn new(circle: &Grid, sign: Sign) -> Result<Self> {
        circle.expect_kind(GridKind::Circle)?;
        let interval = Grid::matched_interval(circle)?;
        let n = interval.n();
        let nc = circle.n_points();
        // circle index of the node at +j h (and its mirror at -j h)
        let pos = |j: usize| (n + j) % nc;
        let neg = |j: usize| n - j;
        let s = FRAC_1_SQRT_2;
        let rows =
            match sign {
                Sign::Plus => (0..=n)
                    .map(|j| {
                        if j == 0 || j == n {
                            vec![(pos(j), re(1.0))]
                        } else {
                            vec![(pos(j), re(s)), (neg(j), re(s))]
                        }
                    })
                    .collect(),
                Sign::Minus => (1..n).map(|j| vec![(pos(j), re(s)), (neg(j), re(-s))]).collect(),
            };
        Ok(ParitySector { sign, circle: circle.clone(), interval, rows })
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn circle(&self) -> &Grid {
        &self.circle
    }

    pub fn interval(&self) -> &Grid {
        &self.interval
    }

    /// Dimension of the sector.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `(I ± P) / 2` in circle coefficients.
    pub fn projector(&self) -> Result<HermitianOperator> {
        let p = build_parity_operator(&self.circle)?;
        let n = p.dim();
        let s = self.sign.value();
        let m = Array2::from_shape_fn((n, n), |(i, j)| {
            let id = if i == j { 1.0 } else { 0.0 };
            (re(id) + p.entry(i, j) * s) * 0.5
        });
        HermitianOperator::new(m, format!("projector {}", self.sign.name()))
    }

    /// Dense isometry `V`: circle coefficients → sector coefficients, with
    /// `V V^H = I`.
    pub fn isometry(&self) -> Array2<Complex64> {
        let mut m = Array2::zeros((self.dim(), self.circle.n_points()));
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[[r, c]] = v;
            }
        }
        m
    }

    /// `V c` for circle coefficients `c`.
    pub fn restrict(&self, c: &ComplexVector) -> Result<ComplexVector> {
        self.circle.expect_len(c.dim())?;
        let x = c.as_slice();
        ComplexVector::from_vec(self.rows.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum()).collect())
    }

    /// `V^H d` for sector coefficients `d`.
    pub fn extend(&self, d: &ComplexVector) -> Result<ComplexVector> {
        if d.dim() != self.dim() {
            return Err(QbcError::DimensionMismatch { expected: self.dim(), found: d.dim() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.circle.n_points()];
        for (row, &dv) in self.rows.iter().zip(d.as_slice()) {
            for &(j, v) in row {
                out[j] += v.conj() * dv;
            }
        }
        ComplexVector::from_vec(out)
    }

    /// `V H V^H` using the two-entry row structure of `V`.
    fn compress(&self, h: &Array2<Complex64>, offset: usize) -> Array2<Complex64> {
        compress_rows(&self.rows, &self.rows, h, offset, offset)
    }
}

/// `A H B^H` for sparse row sets `A`, `B` whose columns are shifted by the
/// given offsets into `H`.
fn compress_rows(a: &[Row], b: &[Row], h: &Array2<Complex64>, oa: usize, ob: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((a.len(), b.len()), |(r, s)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(i, u) in &a[r] {
            for &(j, v) in &b[s] {
                acc += u * h[[oa + i, ob + j]] * v.conj();
            }
        }
        acc
    })
}

/// `(ψ + Pψ)/2` and `(ψ - Pψ)/2` for node samples on a circle grid.
pub fn split_even_odd(state: &ComplexVector, grid: &Grid) -> Result<(ComplexVector, ComplexVector)> {
    grid.expect_kind(GridKind::Circle)?;
    grid.expect_len(state.dim())?;
    let p = parity_permutation(grid)?;
    let v = state.as_slice();
    let even = (0..v.len()).map(|i| (v[i] + v[p.image(i)]) * 0.5).collect();
    let odd = (0..v.len()).map(|i| (v[i] - v[p.image(i)]) * 0.5).collect();
    Ok((ComplexVector::from_vec(even)?, ComplexVector::from_vec(odd)?))
}

/// Weighted norm of `Pψ ∓ ψ`.
fn asymmetry(state: &ComplexVector, grid: &Grid, sign: Sign) -> Result<f64> {
    let p = parity_permutation(grid)?;
    let v = state.as_slice();
    let s = sign.value();
    let d: Vec<Complex64> = (0..v.len()).map(|i| v[p.image(i)] - v[i] * s).collect();
    Ok(ComplexVector::from_vec(d)?.weighted_norm(&grid.weights()))
}

const SECTOR_TOLERANCE: f64 = 1e-8;

fn map_to_interval(state: &ComplexVector, circle: &Grid, sign: Sign) -> Result<ComplexVector> {
    circle.expect_kind(GridKind::Circle)?;
    circle.expect_len(state.dim())?;
    let a = asymmetry(state, circle, sign)?;
    if a > SECTOR_TOLERANCE {
        return Err(QbcError::WrongSector { sector: sign.name(), asymmetry: a });
    }
    let interval = Grid::matched_interval(circle)?;
    let n = interval.n();
    let v = state.as_slice();
    let s = std::f64::consts::SQRT_2;
    let out = (0..=n)
        .map(|j| match sign {
            Sign::Plus => v[(n + j) % (2 * n)] * s,
            Sign::Minus if j == 0 || j == n => Complex64::new(0.0, 0.0),
            Sign::Minus => v[n + j] * s,
        })
        .collect();
    ComplexVector::from_vec(out)
}

/// `φ(y) = √2 ψ(y)` on the matched interval for an even circle state.
pub fn u_plus(state: &ComplexVector, circle: &Grid) -> Result<ComplexVector> {
    map_to_interval(state, circle, Sign::Plus)
}

/// `φ(y) = √2 ψ(y)` for an odd circle state; endpoint samples are zero.
pub fn u_minus(state: &ComplexVector, circle: &Grid) -> Result<ComplexVector> {
    map_to_interval(state, circle, Sign::Minus)
}

fn map_to_circle(phi: &ComplexVector, interval: &Grid, sign: Sign) -> Result<ComplexVector> {
    interval.expect_kind(GridKind::Interval)?;
    interval.expect_len(phi.dim())?;
    let n = interval.n();
    let f = phi.as_slice();
    let s = FRAC_1_SQRT_2;
    let out = (0..2 * n)
        .map(|i| {
            // circle node i sits at (i - n) h
            let (j, mirrored) = if i >= n { (i - n, false) } else { (n - i, true) };
            match sign {
                Sign::Plus => f[j] * s,
                Sign::Minus if j == 0 || j == n => Complex64::new(0.0, 0.0),
                Sign::Minus if mirrored => -f[j] * s,
                Sign::Minus => f[j] * s,
            }
        })
        .collect();
    ComplexVector::from_vec(out)
}

/// Even extension `ψ(x) = φ(|x|)/√2`.
pub fn u_plus_adjoint(phi: &ComplexVector, interval: &Grid) -> Result<ComplexVector> {
    map_to_circle(phi, interval, Sign::Plus)
}

/// Odd extension `ψ(x) = φ(x)/√2`, `ψ(-x) = -φ(x)/√2`.
pub fn u_minus_adjoint(phi: &ComplexVector, interval: &Grid) -> Result<ComplexVector> {
    map_to_circle(phi, interval, Sign::Minus)
}

fn projectability(h: &HermitianOperator, parity: &HermitianOperator, tol: &Tolerances) -> Result<()> {
    let comm = commutator_max(h.matrix(), parity.matrix());
    if comm > tol.commutator * h.max_abs().max(1.0) {
        return Err(QbcError::NotProjectable { commutator: comm });
    }
    Ok(())
}

/// `V± H V±^H` for a parity-invariant circle operator. The `Plus` result
/// acts on all interval nodes, the `Minus` result on interior nodes.
pub fn reduce_hamiltonian(h: &HermitianOperator, circle: &Grid, sign: Sign) -> Result<HermitianOperator> {
    reduce_hamiltonian_with(h, circle, sign, &Tolerances::default())
}

pub fn reduce_hamiltonian_with(
    h: &HermitianOperator,
    circle: &Grid,
    sign: Sign,
    tol: &Tolerances,
) -> Result<HermitianOperator> {
    circle.expect_kind(GridKind::Circle)?;
    circle.expect_len(h.dim())?;
    projectability(h, &build_parity_operator(circle)?, tol)?;
    let sector = ParitySector::new(circle, sign)?;
    HermitianOperator::symmetrized(sector.compress(h.matrix(), 0), format!("{} reduced {}", h.label(), sign.name()))
}

/// Eigenvectors `(χ₊, χ₋)` of `n·σ` for a unit axis.
pub fn axis_eigenvectors(axis: [f64; 3]) -> ([Complex64; 2], [Complex64; 2]) {
    let [x, y, z] = axis;
    let t = Complex64::new(x, y);
    if z >= 0.0 {
        let s = (2.0 * (1.0 + z)).sqrt();
        ([re(1.0 + z) / s, t / s], [-t.conj() / s, re(1.0 + z) / s])
    } else {
        let s = (2.0 * (1.0 - z)).sqrt();
        ([t.conj() / s, re(1.0 - z) / s], [re(1.0 - z) / s, -t / s])
    }
}

/// Interval blocks of a spinor operator restricted to one spinor-parity
/// eigenspace.
#[derive(Debug, Clone)]
pub struct SpinorReduction {
    pub upper: HermitianOperator,
    pub lower: HermitianOperator,
    /// Largest entry of the block coupling the two components; zero for
    /// operators of the form `H ⊗ I`.
    pub coupling_norm: f64,
}

/// Reduces an operator on the doubled circle space (`[upper; lower]`) to
/// the `K₊` (`sign = Plus`) or `K₋` eigenspace of `(n·σ) ⊗ Π`.
///
/// `K₊ = χ₊ ⊗ H₊ ⊕ χ₋ ⊗ H₋` and `K₋ = χ₊ ⊗ H₋ ⊕ χ₋ ⊗ H₊`; `upper` is the
/// block along `χ₊`.
pub fn reduce_spinor(h: &HermitianOperator, circle: &Grid, axis: [f64; 3], sign: Sign) -> Result<SpinorReduction> {
    reduce_spinor_with(h, circle, axis, sign, &Tolerances::default())
}

pub fn reduce_spinor_with(
    h: &HermitianOperator,
    circle: &Grid,
    axis: [f64; 3],
    sign: Sign,
    tol: &Tolerances,
) -> Result<SpinorReduction> {
    circle.expect_kind(GridKind::Circle)?;
    check_unit_axis(axis)?;
    let nc = circle.n_points();
    if h.dim() != 2 * nc {
        return Err(QbcError::DimensionMismatch { expected: 2 * nc, found: h.dim() });
    }
    projectability(h, &build_spinor_parity(circle, axis)?, tol)?;
    let (chi_plus, chi_minus) = axis_eigenvectors(axis);
    let (first, second) = match sign {
        Sign::Plus => (Sign::Plus, Sign::Minus),
        Sign::Minus => (Sign::Minus, Sign::Plus),
    };
    // rows of χ^H ⊗ V over the doubled index space
    let lift = |chi: [Complex64; 2], s: Sign| -> Result<Vec<Row>> {
        let sector = ParitySector::new(circle, s)?;
        Ok(sector
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .flat_map(|&(j, v)| [(j, chi[0].conj() * v), (nc + j, chi[1].conj() * v)])
                    .filter(|(_, v)| v.norm() != 0.0)
                    .collect()
            })
            .collect())
    };
    let a = lift(chi_plus, first)?;
    let b = lift(chi_minus, second)?;
    let m = h.matrix();
    let upper = compress_rows(&a, &a, m, 0, 0);
    let lower = compress_rows(&b, &b, m, 0, 0);
    let coupling = compress_rows(&a, &b, m, 0, 0);
    let coupling_norm = coupling.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tag = sign.name();
    Ok(SpinorReduction {
        upper: HermitianOperator::symmetrized(upper, format!("{} spinor {tag} upper", h.label()))?,
        lower: HermitianOperator::symmetrized(lower, format!("{} spinor {tag} lower", h.label()))?,
        coupling_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eigenvalues;
    use crate::numerics::I;
    use crate::operators::{
        build_circle_laplacian, build_circle_momentum, build_interval_hamiltonian, BoundarySpec, PhysicalConstants,
    };

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn euler_split() {
        let g = Grid::circle(32).unwrap();
        let (e, o) = split_even_odd(&g.sample(|x| (I * x).exp()), &g).unwrap();
        assert!(e.max_abs_diff(&g.sample_real(f64::cos)) < 1e-14);
        assert!(o.max_abs_diff(&g.sample(|x| I * x.sin())) < 1e-14);
        let (e, o) = split_even_odd(&g.sample_real(f64::cos), &g).unwrap();
        assert!(o.norm() < 1e-15);
        assert!(e.max_abs_diff(&g.sample_real(f64::cos)) < 1e-15);
    }

    #[test]
    fn u_plus_on_cosines() {
        let g = Grid::circle(40).unwrap();
        let iv = Grid::matched_interval(&g).unwrap();
        for n in 0..4 {
            let phi = u_plus(&g.sample_real(|x| (n as f64 * x).cos()), &g).unwrap();
            let want = iv.sample_real(|y| std::f64::consts::SQRT_2 * (n as f64 * y).cos());
            assert!(phi.max_abs_diff(&want) < 1e-13, "n={n}");
        }
        let c = g.sample_real(|_| 1.0 / (2.0 * std::f64::consts::PI).sqrt());
        assert!((g.norm(&c) - 1.0).abs() < 1e-12);
        assert!((iv.norm(&u_plus(&c, &g).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u_minus_on_sines_and_sign_convention() {
        let g = Grid::circle(40).unwrap();
        let iv = Grid::matched_interval(&g).unwrap();
        let psi = g.sample_real(|x| (2.0 * x).sin() + 0.5 * (3.0 * x).sin());
        let phi = u_minus(&psi, &g).unwrap();
        let want = iv.sample_real(|y| std::f64::consts::SQRT_2 * ((2.0 * y).sin() + 0.5 * (3.0 * y).sin()));
        assert!(phi.max_abs_diff(&want) < 1e-13);
        assert!(u_minus_adjoint(&phi, &iv).unwrap().max_abs_diff(&psi) < 1e-13);
        assert!(matches!(u_minus(&g.sample_real(f64::cos), &g), Err(QbcError::WrongSector { .. })));
        assert!(matches!(u_plus(&g.sample_real(f64::sin), &g), Err(QbcError::WrongSector { .. })));
    }

    #[test]
    fn isometry_rows_orthonormal() {
        let g = Grid::circle(16).unwrap();
        for s in [Sign::Plus, Sign::Minus] {
            let sec = ParitySector::new(&g, s).unwrap();
            let v = sec.isometry();
            let vvh = v.dot(&v.t().mapv(|z| z.conj()));
            let eye = Array2::<Complex64>::eye(sec.dim());
            assert!((&vvh - &eye).iter().all(|z| z.norm() < 1e-14));
            let proj = sec.projector().unwrap();
            let vhv = v.t().mapv(|z| z.conj()).dot(&v);
            assert!((&vhv - proj.matrix()).iter().all(|z| z.norm() < 1e-14));
            let sq = proj.matrix().dot(proj.matrix());
            assert!((&sq - proj.matrix()).iter().all(|z| z.norm() < 1e-12));
        }
        assert_eq!(ParitySector::new(&g, Sign::Plus).unwrap().dim(), 9);
        assert_eq!(ParitySector::new(&g, Sign::Minus).unwrap().dim(), 7);
    }

    #[test]
    fn laplacian_reduces_to_neumann_and_dirichlet() {
        let g = Grid::circle(24).unwrap();
        let iv = Grid::matched_interval(&g).unwrap();
        let h = build_circle_laplacian(&g, &unit()).unwrap();
        let plus = reduce_hamiltonian(&h, &g, Sign::Plus).unwrap();
        let minus = reduce_hamiltonian(&h, &g, Sign::Minus).unwrap();
        let neu = build_interval_hamiltonian(&iv, &BoundarySpec::Neumann, &unit()).unwrap();
        let dir = build_interval_hamiltonian(&iv, &BoundarySpec::Dirichlet, &unit()).unwrap();
        assert!(plus.max_abs_diff(&neu).unwrap() < 1e-10);
        assert!(minus.max_abs_diff(&dir).unwrap() < 1e-10);
    }

    #[test]
    fn momentum_is_not_projectable() {
        let g = Grid::circle(16).unwrap();
        let p = build_circle_momentum(&g, &unit()).unwrap();
        for s in [Sign::Plus, Sign::Minus] {
            match reduce_hamiltonian(&p, &g, s) {
                Err(QbcError::NotProjectable { commutator }) => assert!(commutator > 0.1),
                other => panic!("expected rejection, got {other:?}"),
            }
        }
    }

    #[test]
    fn spinor_blocks() {
        let g = Grid::circle(16).unwrap();
        let iv = Grid::matched_interval(&g).unwrap();
        let lap = build_circle_laplacian(&g, &unit()).unwrap();
        let h = lap.kron_left([[re(1.0), re(0.0)], [re(0.0), re(1.0)]], "lap x I").unwrap();
        let neu = build_interval_hamiltonian(&iv, &BoundarySpec::Neumann, &unit()).unwrap();
        let dir = build_interval_hamiltonian(&iv, &BoundarySpec::Dirichlet, &unit()).unwrap();
        let z = [0.0, 0.0, 1.0];
        let kp = reduce_spinor(&h, &g, z, Sign::Plus).unwrap();
        assert!(kp.upper.max_abs_diff(&neu).unwrap() < 1e-10);
        assert!(kp.lower.max_abs_diff(&dir).unwrap() < 1e-10);
        assert_eq!(kp.coupling_norm, 0.0);
        let km = reduce_spinor(&h, &g, z, Sign::Minus).unwrap();
        assert!(km.upper.max_abs_diff(&dir).unwrap() < 1e-10);
        assert!(km.lower.max_abs_diff(&neu).unwrap() < 1e-10);
        let tilted = [0.48, -0.6, 0.64];
        let kt = reduce_spinor(&h, &g, tilted, Sign::Plus).unwrap();
        let mut a = hermitian_eigenvalues(&kt.upper).unwrap();
        a.extend(hermitian_eigenvalues(&kt.lower).unwrap());
        a.sort_by(f64::total_cmp);
        let mut b = hermitian_eigenvalues(&neu).unwrap();
        b.extend(hermitian_eigenvalues(&dir).unwrap());
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(kt.coupling_norm < 1e-12);
    }

    #[test]
    fn axis_eigenvectors_are_eigenvectors() {
        for axis in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.36, 0.48, -0.8], [0.0, 0.6, 0.8]] {
            let m = crate::operators::pauli_dot(axis);
            let (p, q) = axis_eigenvectors(axis);
            for (chi, lam) in [(p, 1.0), (q, -1.0)] {
                for r in 0..2 {
                    let v = m[r][0] * chi[0] + m[r][1] * chi[1];
                    assert!((v - chi[r] * lam).norm() < 1e-14);
                }
                assert!((chi[0].norm_sqr() + chi[1].norm_sqr() - 1.0).abs() < 1e-14);
            }
            assert!((p[0].conj() * q[0] + p[1].conj() * q[1]).norm() < 1e-14);
        }
    }
}
