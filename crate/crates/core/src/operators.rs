//! Builders for the discretized operators: circle Laplacian and momentum,
//! interval Hamiltonians under each boundary condition, parity and spinor
//! parity, the probability current and the connection projectability test.
//!
//! All matrices are in the orthonormal coefficient basis of their grid, so a
//! Hermitian matrix here is self-adjoint for the weighted inner product.

use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbcError, Result};
use crate::grids::{parity_permutation, Grid, GridKind};
use crate::numerics::{ComplexVector, HermitianOperator, I};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0, mass: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = PhysicalConstants { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hbar > 0.0 && self.mass > 0.0 && self.hbar.is_finite() && self.mass.is_finite() {
            Ok(())
        } else {
            Err(QbcError::InvalidParameter(format!(
                "hbar and mass must be positive, got hbar={}, mass={}",
                self.hbar, self.mass
            )))
        }
    }

    /// `ħ² / 2m`.
    pub fn kinetic_scale(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        PhysicalConstants { hbar: self.hbar, mass }
    }
}

/// Boundary conditions on `[0, π]`.
///
/// Robin follows `ψ'(0) = μ₀ ψ(0)`, `ψ'(π) = -μ_π ψ(π)`; twisted periodic
/// follows `ψ(0) = e^{iα} ψ(π)`, `ψ'(0) = e^{iα} ψ'(π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundarySpec {
    Dirichlet,
    Neumann,
    Robin {
        mu0: f64,
        mupi: f64,
    },
    #[serde(alias = "twisted")]
    TwistedPeriodic {
        alpha: f64,
    },
}

impl BoundarySpec {
    /// Checks parameters and reduces `α` to `[0, 2π)`.
    pub fn normalized(self) -> Result<Self> {
        match self {
            BoundarySpec::Robin { mu0, mupi } => {
                if !(mu0.is_finite() && mupi.is_finite()) || mu0 < 0.0 || mupi < 0.0 {
                    return Err(QbcError::InvalidParameter(format!(
                        "Robin parameters must be finite and non-negative, got ({mu0}, {mupi})"
                    )));
                }
                Ok(self)
            }
            BoundarySpec::TwistedPeriodic { alpha } => {
                if !alpha.is_finite() {
                    return Err(QbcError::InvalidParameter(format!("twist angle {alpha}")));
                }
                Ok(BoundarySpec::TwistedPeriodic { alpha: alpha.rem_euclid(2.0 * PI) })
            }
            other => Ok(other),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BoundarySpec::Dirichlet => "dirichlet".into(),
            BoundarySpec::Neumann => "neumann".into(),
            BoundarySpec::Robin { mu0, mupi } => format!("robin({mu0},{mupi})"),
            BoundarySpec::TwistedPeriodic { alpha } => format!("twisted({alpha})"),
        }
    }

    /// Dimension of the interval operator on an `n`-cell grid.
    pub fn dimension(&self, n: usize) -> usize {
        match self {
            BoundarySpec::Dirichlet => n - 1,
            BoundarySpec::Neumann | BoundarySpec::Robin { .. } => n + 1,
            BoundarySpec::TwistedPeriodic { .. } => n,
        }
    }
}

/// Samples of the connection coefficient `α(x)` on circle nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSpec {
    pub alpha_samples: Vec<f64>,
}

impl ConnectionSpec {
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        ConnectionSpec { alpha_samples: grid.nodes().iter().map(|&x| f(x)).collect() }
    }
}

pub fn build_circle_laplacian(grid: &Grid, c: &PhysicalConstants) -> Result<HermitianOperator> {
    grid.expect_kind(GridKind::Circle)?;
    c.validate()?;
    let n = grid.n_points();
    let k = c.kinetic_scale() / (grid.spacing() * grid.spacing());
    let m = Array2::from_shape_fn((n, n), |(i, j)| {
        let d = (i + n - j) % n;
        if d == 0 {
            re(2.0 * k)
        } else if d == 1 || d == n - 1 {
            re(-k)
        } else {
            ZERO
        }
    });
    HermitianOperator::new(m, format!("circle laplacian N={n}"))
}

/// Dense matrix of `F^H diag(symbol(κ)) F` on a periodic grid of `n` nodes
/// with integer wavenumbers `ks` and physical wavenumber `κ = k * dk`.
fn periodic_fourier_operator(n: usize, ks: &[i64], dk: f64, symbol: impl Fn(f64) -> f64) -> Array2<Complex64> {
    let nn = n as i64;
    let column: Vec<Complex64> = (0..nn)
        .map(|d| {
            let s: Complex64 = ks
                .iter()
                .map(|&k| {
                    // exact phase reduction keeps large products accurate
                    let r = (k * d).rem_euclid(nn) as f64;
                    Complex64::from_polar(symbol(k as f64 * dk), 2.0 * PI * r / n as f64)
                })
                .sum();
            s / n as f64
        })
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| column[(i + n - j) % n])
}

/// Integer wavenumbers resolved by a periodic grid of `n` nodes:
/// `-n/2+1 ..= n/2` for even `n`, `-(n-1)/2 ..= (n-1)/2` for odd `n`.
pub fn grid_wavenumbers(n: usize) -> Vec<i64> {
    let n = n as i64;
    if n % 2 == 0 {
        (-n / 2 + 1..=n / 2).collect()
    } else {
        (-(n - 1) / 2..=(n - 1) / 2).collect()
    }
}

/// Spectral `-iħ d/dx` on the periodic circle grid: eigenvalues `ħ k` for
/// `k ∈ {-N/2+1, …, N/2}`.
pub fn build_circle_momentum(grid: &Grid, c: &PhysicalConstants) -> Result<HermitianOperator> {
    grid.expect_kind(GridKind::Circle)?;
    build_periodic_momentum(grid, c)
}

/// Spectral momentum on a circle or on a truncated line treated as periodic
/// with period `(2M+1) h`.
pub fn build_periodic_momentum(grid: &Grid, c: &PhysicalConstants) -> Result<HermitianOperator> {
    c.validate()?;
    let n = grid.n_points();
    let dk = match grid.kind() {
        GridKind::Circle => 1.0,
        GridKind::TruncatedLine => 2.0 * PI / (n as f64 * grid.spacing()),
        GridKind::Interval => {
            return Err(QbcError::WrongGridKind {
                expected: "circle or truncated_line",
                found: GridKind::Interval.name(),
            })
        }
    };
    let hbar = c.hbar;
    let m = periodic_fourier_operator(n, &grid_wavenumbers(n), dk, |kappa| hbar * kappa);
    HermitianOperator::symmetrized(m, format!("{} momentum n={n}", grid.kind().name()))
}

pub fn build_interval_hamiltonian(grid: &Grid, bc: &BoundarySpec, c: &PhysicalConstants) -> Result<HermitianOperator> {
    grid.expect_kind(GridKind::Interval)?;
    c.validate()?;
    let bc = bc.normalized()?;
    let n = grid.n();
    let h = grid.spacing();
    let k = c.kinetic_scale() / (h * h);
    let label = format!("interval {} N={n}", bc.name());
    let m = match bc {
        BoundarySpec::Dirichlet => tridiagonal(n - 1, |_| 2.0 * k, |_| -k),
        BoundarySpec::Neumann => robin_matrix(n, h, k, 0.0, 0.0),
        BoundarySpec::Robin { mu0, mupi } => robin_matrix(n, h, k, mu0, mupi),
        BoundarySpec::TwistedPeriodic { alpha } => {
            let mut m = tridiagonal(n, |_| 2.0 * k, |_| -k);
            let phase = Complex64::from_polar(1.0, alpha);
            m[[0, n - 1]] += -k * phase;
            m[[n - 1, 0]] += -k * phase.conj();
            m
        }
    };
    HermitianOperator::new(m, label)
}

fn tridiagonal(dim: usize, diag: impl Fn(usize) -> f64, off: impl Fn(usize) -> f64) -> Array2<Complex64> {
    let mut m = Array2::zeros((dim, dim));
    for i in 0..dim {
        m[[i, i]] = re(diag(i));
        if i + 1 < dim {
            m[[i, i + 1]] = re(off(i));
            m[[i + 1, i]] = re(off(i));
        }
    }
    m
}

/// Ghost-point Robin rows `ψ_{-1} = ψ_1 - 2hμ₀ψ_0` (mirrored at π), made
/// symmetric by the half quadrature weight at each endpoint.
fn robin_matrix(n: usize, h: f64, k: f64, mu0: f64, mupi: f64) -> Array2<Complex64> {
    tridiagonal(
        n + 1,
        |i| match i {
            0 => k * (2.0 + 2.0 * h * mu0),
            i if i == n => k * (2.0 + 2.0 * h * mupi),
            _ => 2.0 * k,
        },
        |i| if i == 0 || i == n - 1 { -SQRT_2 * k } else { -k },
    )
}

pub fn build_parity_operator(grid: &Grid) -> Result<HermitianOperator> {
    let p = parity_permutation(grid)?;
    let n = p.len();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, p.image(i)]] = re(1.0);
    }
    HermitianOperator::new(m, format!("parity {}", grid.kind().name()))
}

/// `n·σ` for a unit axis.
pub fn pauli_dot(axis: [f64; 3]) -> [[Complex64; 2]; 2] {
    let [x, y, z] = axis;
    [[re(z), Complex64::new(x, -y)], [Complex64::new(x, y), re(-z)]]
}

pub fn check_unit_axis(axis: [f64; 3]) -> Result<()> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(QbcError::InvalidParameter(format!("spin axis must be a unit vector, |n| = {norm}")));
    }
    Ok(())
}

/// `(n·σ) ⊗ Π` on the doubled space ordered `[upper; lower]`.
pub fn build_spinor_parity(grid: &Grid, axis: [f64; 3]) -> Result<HermitianOperator> {
    grid.expect_kind(GridKind::Circle)?;
    check_unit_axis(axis)?;
    let parity = build_parity_operator(grid)?;
    parity.kron_left(pauli_dot(axis), "spinor parity")
}

/// Probability current `(ħ/m) Im(ψ̄ ψ')` with central differences (periodic
/// on the circle and the truncated line, one-sided second order at the ends
/// of the interval).
pub fn compute_current(state: &ComplexVector, grid: &Grid, c: &PhysicalConstants) -> Result<Vec<f64>> {
    grid.expect_len(state.dim())?;
    c.validate()?;
    let psi = state.as_slice();
    let n = psi.len();
    let h = grid.spacing();
    let deriv = |i: usize| -> Complex64 {
        match grid.kind() {
            GridKind::Circle | GridKind::TruncatedLine => (psi[(i + 1) % n] - psi[(i + n - 1) % n]) / (2.0 * h),
            GridKind::Interval => {
                if i == 0 {
                    (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * h)
                } else {
                    (psi[i + 1] - psi[i - 1]) / (2.0 * h)
                }
            }
        }
    };
    let scale = c.hbar / c.mass;
    Ok((0..n).map(|i| scale * (psi[i].conj() * deriv(i)).im).collect())
}

/// Outcome of the projectability test for a connection `A = iα(x) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectabilityCheck {
    pub projectable: bool,
    pub max_violation: f64,
}

/// A connection passes to the quotient iff `α` is odd and vanishes at 0.
pub fn check_connection_projectable(conn: &ConnectionSpec, grid: &Grid) -> Result<ProjectabilityCheck> {
    grid.expect_kind(GridKind::Circle)?;
    grid.expect_len(conn.alpha_samples.len())?;
    let p = parity_permutation(grid)?;
    let a = &conn.alpha_samples;
    let odd = (0..a.len()).map(|j| (a[j] + a[p.image(j)]).abs()).fold(0.0, f64::max);
    let zero = grid.index_of(0.0).map_or(0.0, |i| a[i].abs());
    let max_violation = odd.max(zero);
    Ok(ProjectabilityCheck { projectable: odd <= 1e-10 && zero <= 1e-10, max_violation })
}

/// `e^{ikx}` helper used by tests and experiments.
pub fn plane_wave(k: f64) -> impl Fn(f64) -> Complex64 {
    move |x| (I * k * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{commutator_max, hermitian_eigenvalues};

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn circle_laplacian_n4_entries() {
        let g = Grid::circle(4).unwrap();
        let h = g.spacing();
        let op = build_circle_laplacian(&g, &unit()).unwrap();
        let inv = 1.0 / (h * h);
        assert!((op.entry(0, 0).re - inv).abs() < 1e-13);
        assert!((op.entry(0, 1).re + 0.5 * inv).abs() < 1e-13);
        assert!((op.entry(0, 3).re + 0.5 * inv).abs() < 1e-13);
        assert_eq!(op.entry(0, 2), ZERO);
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| op.entry(i, j).re).sum();
            assert!(row.abs() < 1e-12);
        }
    }

    #[test]
    fn circle_laplacian_constant_in_kernel() {
        let g = Grid::circle(16).unwrap();
        let op = build_circle_laplacian(&g, &unit()).unwrap();
        let v = op.apply(&g.sample_real(|_| 1.0)).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn circle_laplacian_low_spectrum() {
        let g = Grid::circle(512).unwrap();
        let ev = hermitian_eigenvalues(&build_circle_laplacian(&g, &unit()).unwrap()).unwrap();
        let mut distinct = vec![ev[0]];
        for &e in &ev[1..] {
            if e - distinct.last().unwrap() > 1e-6 {
                distinct.push(e);
            }
        }
        for (n, e) in distinct.iter().take(5).enumerate() {
            let want = (n * n) as f64 / 2.0;
            assert!((e - want).abs() <= 1e-3 * want.max(1.0), "level {n}: {e} vs {want}");
        }
        for n in 1..6 {
            assert!((ev[2 * n - 1] - ev[2 * n]).abs() < 1e-9, "pair {n} not degenerate");
        }
    }

    #[test]
    fn momentum_zero_mode_and_plane_wave() {
        let g = Grid::circle(32).unwrap();
        let c = PhysicalConstants::new(0.7, 1.0).unwrap();
        let p = build_circle_momentum(&g, &c).unwrap();
        assert!(p.apply(&g.sample_real(|_| 1.0)).unwrap().norm() < 1e-12);
        let wave = g.sample(plane_wave(1.0));
        let pw = p.apply(&wave).unwrap();
        for i in 0..g.n_points() {
            assert!((pw[i] - wave[i] * 0.7).norm() < 1e-12);
        }
    }

    #[test]
    fn momentum_spectrum_is_integers() {
        let g = Grid::circle(64).unwrap();
        let ev = hermitian_eigenvalues(&build_circle_momentum(&g, &unit()).unwrap()).unwrap();
        for (e, k) in ev.iter().zip(-31..=32) {
            assert!((e - k as f64).abs() < 1e-10, "{e} vs {k}");
        }
    }

    #[test]
    fn dirichlet_and_neumann_low_levels() {
        let g = Grid::interval(400).unwrap();
        let d =
            hermitian_eigenvalues(&build_interval_hamiltonian(&g, &BoundarySpec::Dirichlet, &unit()).unwrap()).unwrap();
        let nm =
            hermitian_eigenvalues(&build_interval_hamiltonian(&g, &BoundarySpec::Neumann, &unit()).unwrap()).unwrap();
        for i in 0..5 {
            let dn = ((i + 1) * (i + 1)) as f64 / 2.0;
            let nn = (i * i) as f64 / 2.0;
            assert!((d[i] - dn).abs() <= 1e-3 * dn, "dirichlet {i}: {}", d[i]);
            assert!((nm[i] - nn).abs() <= 1e-3 * nn.max(1e-3), "neumann {i}: {}", nm[i]);
        }
    }

    #[test]
    fn robin_zero_is_neumann() {
        let g = Grid::interval(20).unwrap();
        let r = build_interval_hamiltonian(&g, &BoundarySpec::Robin { mu0: 0.0, mupi: 0.0 }, &unit()).unwrap();
        let n = build_interval_hamiltonian(&g, &BoundarySpec::Neumann, &unit()).unwrap();
        assert_eq!(r.matrix(), n.matrix());
    }

    #[test]
    fn negative_robin_rejected() {
        let g = Grid::interval(20).unwrap();
        assert!(build_interval_hamiltonian(&g, &BoundarySpec::Robin { mu0: -1.0, mupi: 0.0 }, &unit()).is_err());
    }

    #[test]
    fn twisted_zero_is_periodic_and_pi_is_antiperiodic() {
        let g = Grid::interval(12).unwrap();
        let t0 = build_interval_hamiltonian(&g, &BoundarySpec::TwistedPeriodic { alpha: 0.0 }, &unit()).unwrap();
        let k = unit().kinetic_scale() / (g.spacing() * g.spacing());
        assert!((t0.entry(0, 11) - re(-k)).norm() < 1e-12);
        assert!((t0.entry(11, 0) - re(-k)).norm() < 1e-12);
        let tpi = build_interval_hamiltonian(&g, &BoundarySpec::TwistedPeriodic { alpha: PI }, &unit()).unwrap();
        assert!((tpi.entry(0, 11) - re(k)).norm() < 1e-12);
        let t2pi = BoundarySpec::TwistedPeriodic { alpha: 2.0 * PI + 0.5 }.normalized().unwrap();
        assert_eq!(t2pi, BoundarySpec::TwistedPeriodic { alpha: (2.0 * PI + 0.5).rem_euclid(2.0 * PI) });
        // Periodic interval of length π matches the circle Laplacian of period π.
        let ev = hermitian_eigenvalues(&t0).unwrap();
        assert!(ev[0].abs() < 1e-10);
        assert!((ev[1] - ev[2]).abs() < 1e-9);
    }

    #[test]
    fn wrong_kind_rejected() {
        let g = Grid::interval(8).unwrap();
        assert!(matches!(build_circle_laplacian(&g, &unit()), Err(QbcError::WrongGridKind { .. })));
        assert!(build_circle_momentum(&g, &unit()).is_err());
        let c = Grid::circle(8).unwrap();
        assert!(build_interval_hamiltonian(&c, &BoundarySpec::Neumann, &unit()).is_err());
    }

    #[test]
    fn parity_actions() {
        let g = Grid::circle(16).unwrap();
        let p = build_parity_operator(&g).unwrap();
        let cosv = g.sample_real(f64::cos);
        let sinv = g.sample_real(f64::sin);
        assert!(p.apply(&cosv).unwrap().max_abs_diff(&cosv) < 1e-12);
        let ps = p.apply(&sinv).unwrap();
        for i in 0..16 {
            assert!((ps[i] + sinv[i]).norm() < 1e-12);
        }
        let v = g.sample(|x| Complex64::new(x.exp(), x * x));
        let twice = p.apply(&p.apply(&v).unwrap()).unwrap();
        assert_eq!(twice, v);
    }

    #[test]
    fn laplacian_commutes_with_parity() {
        let g = Grid::circle(64).unwrap();
        let h = build_circle_laplacian(&g, &unit()).unwrap();
        let p = build_parity_operator(&g).unwrap();
        assert!(commutator_max(h.matrix(), p.matrix()) <= 1e-12);
    }

    #[test]
    fn spinor_parity_sectors() {
        let g = Grid::circle(16).unwrap();
        let sp = build_spinor_parity(&g, [0.0, 0.0, 1.0]).unwrap();
        let n = g.n_points();
        let even = g.sample_real(|x| x.cos() + 0.3 * (2.0 * x).cos());
        let odd = g.sample_real(|x| x.sin() - 0.2 * (3.0 * x).sin());
        let stack = |a: &ComplexVector, b: &ComplexVector| {
            ComplexVector::from_vec(a.as_slice().iter().chain(b.as_slice()).copied().collect()).unwrap()
        };
        let kp = stack(&even, &odd);
        assert!(sp.apply(&kp).unwrap().max_abs_diff(&kp) < 1e-12);
        let km = stack(&odd, &even);
        let out = sp.apply(&km).unwrap();
        for i in 0..2 * n {
            assert!((out[i] + km[i]).norm() < 1e-12);
        }
        let ev = hermitian_eigenvalues(&sp).unwrap();
        assert!(ev[..n].iter().all(|e| (e + 1.0).abs() < 1e-10));
        assert!(ev[n..].iter().all(|e| (e - 1.0).abs() < 1e-10));
        assert!(build_spinor_parity(&g, [0.0, 0.0, 2.0]).is_err());
        let tilted = build_spinor_parity(&g, [0.6, 0.0, 0.8]).unwrap();
        let sq = tilted.matrix().dot(tilted.matrix());
        assert!(commutator_max(&sq, &Array2::eye(2 * n)) < 1e-12);
        assert!((&sq - &Array2::<Complex64>::eye(2 * n)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn real_state_carries_no_current() {
        let g = Grid::circle(32).unwrap();
        let j = compute_current(&g.sample_real(|x| x.cos() + 2.0), &g, &unit()).unwrap();
        assert!(j.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn plane_wave_current_is_constant() {
        let g = Grid::circle(64).unwrap();
        let c = PhysicalConstants::new(1.0, 2.0).unwrap();
        let j = compute_current(&g.sample(plane_wave(1.0)), &g, &c).unwrap();
        let h = g.spacing();
        let want = (c.hbar / c.mass) * h.sin() / h;
        assert!(want > 0.0);
        assert!(j.iter().all(|v| (v - want).abs() < 1e-13));
    }

    #[test]
    fn connection_projectability() {
        let g = Grid::circle(32).unwrap();
        let odd = check_connection_projectable(&ConnectionSpec::sample(&g, f64::sin), &g).unwrap();
        assert!(odd.projectable);
        let even = check_connection_projectable(&ConnectionSpec::sample(&g, f64::cos), &g).unwrap();
        assert!(!even.projectable);
        assert!(even.max_violation >= 1.0);
        let zero = check_connection_projectable(&ConnectionSpec::sample(&g, |_| 0.0), &g).unwrap();
        assert!(zero.projectable && zero.max_violation == 0.0);
    }
}
