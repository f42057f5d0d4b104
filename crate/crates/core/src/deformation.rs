//! Metric deformations `y = F(x)` of `[0, π]` that turn the Neumann
//! Hamiltonian into one with Robin boundary behaviour.
//!
//! The deformed Hamiltonian is assembled from its quadratic form
//! `c ∫ g |(√g φ)'|² dy`, `c = ħ²/2m`, which is the symmetric (divergence)
//! form of `-c g² φ'' - 2c g g' φ' + V φ`. Its natural boundary condition is
//! the Robin condition with `ν₀`, `ν_π`, and at `a = 1` it reduces exactly to
//! the Neumann matrix.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbcError, Result};
use crate::exec::Execution;
use crate::grids::{Grid, GridKind};
use crate::numerics::{ComplexVector, HermitianOperator};
use crate::operators::PhysicalConstants;

/// Piecewise-linear density `f_ε`: slope from `a₀` to `l` on `[0, ε]`,
/// constant `l` in the bulk, slope from `l` to `a_π` on `[π-ε, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDeformation {
    epsilon: f64,
    a0: f64,
    api: f64,
    l: f64,
}

/// Bulk height `l` fixed by `∫ f = π`; may be non-positive for invalid input.
pub fn bulk_height(epsilon: f64, a0: f64, api: f64) -> f64 {
    (PI - 0.5 * epsilon * (a0 + api)) / (PI - epsilon)
}

/// `ν₀ = π(a-1) / (2a²ε(π-ε))` for the symmetric `f_ε`.
pub fn nu0_formula(epsilon: f64, a: f64) -> f64 {
    PI * (a - 1.0) / (2.0 * a * a * epsilon * (PI - epsilon))
}

pub fn make_feps(epsilon: f64, a: f64) -> Result<MetricDeformation> {
    MetricDeformation::asymmetric(epsilon, a, a)
}

impl MetricDeformation {
    /// Independent end values `a₀` at `x = 0` and `a_π` at `x = π`.
    pub fn asymmetric(epsilon: f64, a0: f64, api: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < PI / 2.0) {
            return Err(QbcError::InvalidParameter(format!("epsilon must lie in (0, π/2), got {epsilon}")));
        }
        if !(a0 > 0.0 && api > 0.0 && a0.is_finite() && api.is_finite()) {
            return Err(QbcError::InvalidParameter(format!("end values must be positive, got ({a0}, {api})")));
        }
        let l = bulk_height(epsilon, a0, api);
        if !(l > 0.0) {
            return Err(QbcError::InvalidParameter(format!(
                "bulk height l = {l} is not positive for epsilon = {epsilon}, a = ({a0}, {api})"
            )));
        }
        Ok(MetricDeformation { epsilon, a0, api, l })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn a(&self) -> f64 {
        self.a0
    }

    pub fn a_pi(&self) -> f64 {
        self.api
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    fn kappa0(&self) -> f64 {
        (self.l - self.a0) / self.epsilon
    }

    fn kappa_pi(&self) -> f64 {
        (self.l - self.api) / self.epsilon
    }

    pub fn f(&self, x: f64) -> f64 {
        let e = self.epsilon;
        if x <= e {
            self.a0 + self.kappa0() * x
        } else if x < PI - e {
            self.l
        } else {
            self.api + self.kappa_pi() * (PI - x)
        }
    }

    /// `f'`, taking the layer slope at the kinks.
    pub fn f_prime(&self, x: f64) -> f64 {
        let e = self.epsilon;
        if x <= e {
            self.kappa0()
        } else if x < PI - e {
            0.0
        } else {
            -self.kappa_pi()
        }
    }

    /// `y` where the first layer ends.
    pub fn layer_end(&self) -> f64 {
        0.5 * self.epsilon * (self.a0 + self.l)
    }

    /// `y` where the last layer starts.
    pub fn layer_start_pi(&self) -> f64 {
        PI - 0.5 * self.epsilon * (self.api + self.l)
    }

    /// Primitive `F(x) = ∫₀ˣ f`; `F(0) = 0` and `F(π) = π` exactly.
    #[allow(non_snake_case)]
    pub fn F(&self, x: f64) -> f64 {
        let e = self.epsilon;
        if x <= e {
            x * (self.a0 + 0.5 * self.kappa0() * x)
        } else if x < PI - e {
            self.layer_end() + self.l * (x - e)
        } else {
            let s = PI - x;
            PI - s * (self.api + 0.5 * self.kappa_pi() * s)
        }
    }

    /// `F⁻¹(y)` by the increasing root of each quadratic piece.
    #[allow(non_snake_case)]
    pub fn F_inverse(&self, y: f64) -> f64 {
        let (y0, y1) = (self.layer_end(), self.layer_start_pi());
        if y <= y0 {
            2.0 * y / (self.a0 + (self.a0 * self.a0 + 2.0 * self.kappa0() * y).max(0.0).sqrt())
        } else if y < y1 {
            self.epsilon + (y - y0) / self.l
        } else {
            let t = PI - y;
            PI - 2.0 * t / (self.api + (self.api * self.api + 2.0 * self.kappa_pi() * t).max(0.0).sqrt())
        }
    }

    /// `g(y) = f(F⁻¹(y))`, in closed form.
    pub fn g(&self, y: f64) -> f64 {
        if y <= self.layer_end() {
            (self.a0 * self.a0 + 2.0 * self.kappa0() * y).max(0.0).sqrt()
        } else if y < self.layer_start_pi() {
            self.l
        } else {
            (self.api * self.api + 2.0 * self.kappa_pi() * (PI - y)).max(0.0).sqrt()
        }
    }

    pub fn g_prime(&self, y: f64) -> f64 {
        if y <= self.layer_end() {
            self.kappa0() / self.g(y)
        } else if y < self.layer_start_pi() {
            0.0
        } else {
            -self.kappa_pi() / self.g(y)
        }
    }

    pub fn g_second(&self, y: f64) -> f64 {
        let g = self.g(y);
        if y <= self.layer_end() {
            -self.kappa0().powi(2) / g.powi(3)
        } else if y < self.layer_start_pi() {
            0.0
        } else {
            -self.kappa_pi().powi(2) / g.powi(3)
        }
    }

    /// `V = (ħ²/8m)[(g')² + 2 g g'']` away from the kinks. Expanding
    /// `p_f²/2m` gives `-(ħ²/2m)(g² d² + 2 g g' d) - V`, so `V` enters the
    /// transformed Hamiltonian with a minus sign.
    pub fn potential(&self, y: f64, c: &PhysicalConstants) -> f64 {
        let g = self.g(y);
        let gp = self.g_prime(y);
        c.hbar * c.hbar / (8.0 * c.mass) * (gp * gp + 2.0 * g * self.g_second(y))
    }
}

/// `(ν₀, ν_π) = (-f'(0)/2f(0)², f'(π)/2f(π)²)`.
pub fn robin_params(d: &MetricDeformation) -> (f64, f64) {
    let nu0 = -d.f_prime(0.0) / (2.0 * d.f(0.0).powi(2));
    let nupi = d.f_prime(PI) / (2.0 * d.f(PI).powi(2));
    (nu0, nupi)
}

/// Cubic Lagrange interpolation of node samples at `x`, with the four-point
/// stencil shifted inward at the ends.
fn cubic_interpolate(values: &[Complex64], h: f64, x: f64) -> Complex64 {
    let n = values.len();
    let t = x / h;
    let base = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (t - (base + j) as f64) / (i as f64 - j as f64);
            }
        }
        acc += values[base + i] * w;
    }
    acc
}

/// `φ(y) = ψ(F⁻¹(y)) / √g(y)` on the same interval grid.
#[allow(non_snake_case)]
pub fn apply_Uf(state: &ComplexVector, d: &MetricDeformation, grid: &Grid) -> Result<ComplexVector> {
    grid.expect_kind(GridKind::Interval)?;
    grid.expect_len(state.dim())?;
    let h = grid.spacing();
    let psi = state.as_slice();
    ComplexVector::from_vec(
        grid.nodes().iter().map(|&y| cubic_interpolate(psi, h, d.F_inverse(y)) / d.g(y).sqrt()).collect(),
    )
}

/// `ψ(x) = √f(x) φ(F(x))`, the inverse of [`apply_Uf`] up to interpolation.
#[allow(non_snake_case)]
pub fn apply_Uf_adjoint(state: &ComplexVector, d: &MetricDeformation, grid: &Grid) -> Result<ComplexVector> {
    grid.expect_kind(GridKind::Interval)?;
    grid.expect_len(state.dim())?;
    let h = grid.spacing();
    let phi = state.as_slice();
    ComplexVector::from_vec(grid.nodes().iter().map(|&x| cubic_interpolate(phi, h, d.F(x)) * d.f(x).sqrt()).collect())
}

/// Real symmetric tridiagonal `(diag, off)` of `H_f` in coefficient
/// coordinates.
fn form_tridiagonal(d: &MetricDeformation, grid: &Grid, c: &PhysicalConstants) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let h = grid.spacing();
    let k = c.kinetic_scale() / h;
    let w = grid.weights();
    let y = grid.nodes();
    let t: Vec<f64> = (0..=n).map(|j| (d.g(y[j]) / w[j]).sqrt()).collect();
    let mid: Vec<f64> = (0..n).map(|j| d.g(0.5 * (y[j] + y[j + 1]))).collect();
    let diag = (0..=n)
        .map(|j| {
            let left = if j > 0 { mid[j - 1] } else { 0.0 };
            let right = if j < n { mid[j] } else { 0.0 };
            k * t[j] * t[j] * (left + right)
        })
        .collect();
    let off = (0..n).map(|j| -k * mid[j] * t[j] * t[j + 1]).collect();
    (diag, off)
}

fn tridiagonal_apply(diag: &[f64], off: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = v[i] * diag[i];
            if i > 0 {
                s += v[i - 1] * off[i - 1];
            }
            if i + 1 < n {
                s += v[i + 1] * off[i];
            }
            s
        })
        .collect()
}

fn tridiagonal_dense(diag: &[f64], off: &[f64]) -> Array2<Complex64> {
    let n = diag.len();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = Complex64::new(diag[i], 0.0);
        if i + 1 < n {
            m[[i, i + 1]] = Complex64::new(off[i], 0.0);
            m[[i + 1, i]] = Complex64::new(off[i], 0.0);
        }
    }
    m
}

#[derive(Debug, Clone)]
pub struct DeformedOperators {
    pub h_f: HermitianOperator,
    pub p_f: HermitianOperator,
    /// Potential samples at the nodes (layer value at the kinks).
    pub v: Vec<f64>,
    /// Samples of `g = f ∘ F⁻¹`.
    pub g: Vec<f64>,
}

/// `H_f` and `p_f = -iħ √g (d/dy) √g` on an interval grid.
pub fn build_deformed(d: &MetricDeformation, grid: &Grid, c: &PhysicalConstants) -> Result<DeformedOperators> {
    grid.expect_kind(GridKind::Interval)?;
    c.validate()?;
    let (diag, off) = form_tridiagonal(d, grid, c);
    let label = format!("H_f eps={} a=({}, {})", d.epsilon, d.a0, d.api);
    let h_f = HermitianOperator::new(tridiagonal_dense(&diag, &off), label)?;
    let g: Vec<f64> = grid.nodes().iter().map(|&y| d.g(y)).collect();
    let dim = g.len();
    let h = grid.spacing();
    let mut p = Array2::zeros((dim, dim));
    for j in 0..dim - 1 {
        // -iħ S D S with D antisymmetric central difference
        let v = c.hbar * (g[j] * g[j + 1]).sqrt() / (2.0 * h);
        p[[j, j + 1]] = Complex64::new(0.0, -v);
        p[[j + 1, j]] = Complex64::new(0.0, v);
    }
    let p_f = HermitianOperator::new(p, format!("p_f eps={}", d.epsilon))?;
    let v = grid.nodes().iter().map(|&y| d.potential(y, c)).collect();
    Ok(DeformedOperators { h_f, p_f, v, g })
}

/// `M = m (2μ₀π / (2μ₀π - 1))²`.
pub fn renormalized_mass(mu0: f64, c: &PhysicalConstants) -> Result<f64> {
    c.validate()?;
    let s = 2.0 * mu0 * PI;
    if !(mu0.is_finite() && s > 1.0) {
        return Err(QbcError::InvalidParameter(format!("renormalized mass needs mu0 > 1/(2π), got {mu0}")));
    }
    Ok(c.mass * (s / (s - 1.0)).powi(2))
}

/// How `a` depends on `ε` in a limit study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `a = 1/(2μ₀ε)`.
    Robin,
    /// `a = ε^{-1/2}`.
    Dirichlet,
    /// `a = 1 + ε²`.
    Neumann,
    /// `a = ε^{-2}`.
    Unphysical,
}

impl Regime {
    pub fn a(self, epsilon: f64, mu0: f64) -> f64 {
        match self {
            Regime::Robin => 1.0 / (2.0 * mu0 * epsilon),
            Regime::Dirichlet => epsilon.powf(-0.5),
            Regime::Neumann => 1.0 + epsilon * epsilon,
            Regime::Unphysical => epsilon.powi(-2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Robin => "robin",
            Regime::Dirichlet => "dirichlet",
            Regime::Neumann => "neumann",
            Regime::Unphysical => "unphysical",
        }
    }
}

/// Fixed `C²` test function `(1 - s²)³`, `s = (y - π/2)/(π/4)`, supported
/// in `[π/4, 3π/4]`.
pub fn bulk_test_function(y: f64) -> f64 {
    let s = (y - PI / 2.0) / (PI / 4.0);
    if s.abs() < 1.0 {
        (1.0 - s * s).powi(3)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobinLimitReport {
    pub regime: Regime,
    pub mu0: f64,
    /// Descending.
    pub epsilons: Vec<f64>,
    pub a: Vec<f64>,
    pub l: Vec<f64>,
    pub nu0: Vec<f64>,
    pub nupi: Vec<f64>,
    /// `None` where `f_ε` is not a valid density (`l ≤ 0`).
    pub bulk_residuals: Vec<Option<f64>>,
    /// `M/m` of the bulk limit operator.
    pub mass_ratio: f64,
}

impl RobinLimitReport {
    /// The unphysical regime, or any row whose bulk height is not positive.
    pub fn is_unphysical(&self) -> bool {
        self.regime == Regime::Unphysical || self.l.iter().any(|&l| !(l > 0.0))
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }
}

/// Scans `ε` for one regime, recording `ν₀`, `ν_π`, `l` and the bulk
/// residual `|(H_f - H_lim) ψ| / |ψ|` against the free Neumann Hamiltonian
/// with mass `M` (robin) or `m` (other regimes).
pub fn limit_study(
    mu0: f64,
    epsilons: &[f64],
    regime: Regime,
    grid: &Grid,
    c: &PhysicalConstants,
    exec: Execution,
) -> Result<RobinLimitReport> {
    grid.expect_kind(GridKind::Interval)?;
    c.validate()?;
    if epsilons.is_empty() {
        return Err(QbcError::InvalidParameter("empty epsilon list".into()));
    }
    if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(QbcError::InvalidParameter("epsilon list must be strictly descending".into()));
    }
    if let Some(&e) = epsilons.iter().find(|&&e| !(e > 0.0 && e < PI / 2.0)) {
        return Err(QbcError::InvalidParameter(format!("epsilon {e} outside (0, π/2)")));
    }
    if regime == Regime::Robin && !(mu0 > 0.0) {
        return Err(QbcError::InvalidParameter(format!("robin regime needs mu0 > 0, got {mu0}")));
    }
    let mass_ratio = match regime {
        Regime::Robin => renormalized_mass(mu0, c)? / c.mass,
        _ => 1.0,
    };
    let limit = limit_tridiagonal(grid, &c.with_mass(c.mass * mass_ratio));
    let test = grid.to_coefficients(&grid.sample_real(bulk_test_function))?;
    let test_norm = test.norm();

    let rows = exec.map(epsilons.len(), |i| {
        let e = epsilons[i];
        let a = regime.a(e, mu0);
        let l = bulk_height(e, a, a);
        let nu = nu0_formula(e, a);
        let residual = make_feps(e, a).ok().map(|d| {
            let (diag, off) = form_tridiagonal(&d, grid, c);
            let x = test.as_slice();
            let hf = tridiagonal_apply(&diag, &off, x);
            let hl = tridiagonal_apply(&limit.0, &limit.1, x);
            let r: f64 = hf.iter().zip(&hl).map(|(p, q)| (p - q).norm_sqr()).sum();
            r.sqrt() / test_norm
        });
        (a, l, nu, residual)
    });

    Ok(RobinLimitReport {
        regime,
        mu0,
        epsilons: epsilons.to_vec(),
        a: rows.iter().map(|r| r.0).collect(),
        l: rows.iter().map(|r| r.1).collect(),
        nu0: rows.iter().map(|r| r.2).collect(),
        nupi: rows.iter().map(|r| r.2).collect(),
        bulk_residuals: rows.iter().map(|r| r.3).collect(),
        mass_ratio,
    })
}

fn limit_tridiagonal(grid: &Grid, c: &PhysicalConstants) -> (Vec<f64>, Vec<f64>) {
    let flat = MetricDeformation { epsilon: 0.5, a0: 1.0, api: 1.0, l: 1.0 };
    form_tridiagonal(&flat, grid, c)
}

/// `|φ'(0) - ν₀ φ(0)|` and `|φ'(π) + ν_π φ(π)|` with one-sided second-order
/// differences.
pub fn robin_boundary_residuals(phi: &ComplexVector, grid: &Grid, nu0: f64, nupi: f64) -> Result<(f64, f64)> {
    grid.expect_kind(GridKind::Interval)?;
    grid.expect_len(phi.dim())?;
    let p = phi.as_slice();
    let n = p.len() - 1;
    let h = grid.spacing();
    let d0 = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * h);
    let dn = (3.0 * p[n] - 4.0 * p[n - 1] + p[n - 2]) / (2.0 * h);
    Ok(((d0 - p[0] * nu0).norm(), (dn + p[n] * nupi).norm()))
}
