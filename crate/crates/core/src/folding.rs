//! Folding of the circle (or a truncated line) onto `[0, π]` (or `[0, L]`)
//! with a two-component wavefunction `Φ(y) = (ψ(y), ψ(-y))`.
//!
//! In coefficient coordinates the folding map is a permutation: the folded
//! basis lists `φ₊` at every folded node, then `φ₋` at the nodes that are not
//! fixed by the reflection. At a fixed point both components share the one
//! coordinate, which is how the boundary condition `Φ = σ_x Φ` is built in.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{QbcError, Result};
use crate::exec::Execution;
use crate::grids::{FoldIndexMap, Grid, GridKind};
use crate::numerics::{conjugate, ComplexVector, HermitianOperator, LuFactors, I};
use crate::operators::{build_periodic_momentum, grid_wavenumbers, PhysicalConstants};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Two-component state on the folded grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorState {
    pub phi_plus: ComplexVector,
    pub phi_minus: ComplexVector,
    /// Quadrature weights of the folded grid (half weight at fixed points).
    pub weights: Vec<f64>,
}

impl SpinorState {
    pub fn new(phi_plus: ComplexVector, phi_minus: ComplexVector, weights: Vec<f64>) -> Result<Self> {
        if phi_plus.dim() != phi_minus.dim() || phi_plus.dim() != weights.len() {
            return Err(QbcError::DimensionMismatch {
                expected: weights.len(),
                found: phi_plus.dim().max(phi_minus.dim()),
            });
        }
        Ok(SpinorState { phi_plus, phi_minus, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        let a = self.phi_plus.weighted_norm(&self.weights);
        let b = self.phi_minus.weighted_norm(&self.weights);
        a.hypot(b)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(QbcError::NotNormalized { norm: n });
        }
        let scale = |v: &ComplexVector| ComplexVector::new(v.as_array() / Complex64::new(n, 0.0));
        SpinorState::new(scale(&self.phi_plus)?, scale(&self.phi_minus)?, self.weights.clone())
    }

    pub fn max_abs_diff(&self, other: &SpinorState) -> f64 {
        self.phi_plus.max_abs_diff(&other.phi_plus).max(self.phi_minus.max_abs_diff(&other.phi_minus))
    }
}

/// Folding map for one source grid.
#[derive(Debug, Clone)]
pub struct Folding {
    map: FoldIndexMap,
    fixed: Vec<bool>,
    /// Source index for each folded coefficient.
    order: Vec<usize>,
}

impl Folding {
    pub fn new(source: &Grid) -> Result<Self> {
        let map = FoldIndexMap::new(source)?;
        let fixed: Vec<bool> = map.pairs().iter().map(|&(p, q)| p == q).collect();
        let mut order: Vec<usize> = map.pairs().iter().map(|&(p, _)| p).collect();
        order.extend(map.pairs().iter().zip(&fixed).filter(|(_, &f)| !f).map(|(&(_, q), _)| q));
        Ok(Folding { map, fixed, order })
    }

    pub fn source(&self) -> &Grid {
        self.map.source()
    }

    pub fn nodes(&self) -> &[f64] {
        self.map.target_nodes()
    }

    pub fn weights(&self) -> &[f64] {
        self.map.target_weights()
    }

    /// Number of folded nodes.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Dimension of the folded coefficient space (equals the source size).
    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn fixed_positions(&self) -> Vec<usize> {
        self.map.fixed_positions()
    }

    pub fn fold(&self, state: &ComplexVector) -> Result<SpinorState> {
        self.source().expect_len(state.dim())?;
        let v = state.as_slice();
        let plus = self.map.pairs().iter().map(|&(p, _)| v[p]).collect();
        let minus = self.map.pairs().iter().map(|&(_, q)| v[q]).collect();
        SpinorState::new(ComplexVector::from_vec(plus)?, ComplexVector::from_vec(minus)?, self.weights().to_vec())
    }

    /// Inverse of [`Folding::fold`]; at fixed points the two components are
    /// averaged.
    pub fn unfold(&self, s: &SpinorState) -> Result<ComplexVector> {
        if s.len() != self.len() {
            return Err(QbcError::DimensionMismatch { expected: self.len(), found: s.len() });
        }
        let mut out = vec![ZERO; self.source().n_points()];
        let (a, b) = (s.phi_plus.as_slice(), s.phi_minus.as_slice());
        for (j, &(p, q)) in self.map.pairs().iter().enumerate() {
            if p == q {
                out[p] = (a[j] + b[j]) * 0.5;
            } else {
                out[p] = a[j];
                out[q] = b[j];
            }
        }
        ComplexVector::from_vec(out)
    }

    /// Largest `|φ₊ - φ₋|` over the fixed points.
    pub fn boundary_mismatch(&self, s: &SpinorState) -> f64 {
        self.fixed_positions().into_iter().map(|j| (s.phi_plus[j] - s.phi_minus[j]).norm()).fold(0.0, f64::max)
    }

    /// Spinor → folded coefficients `[φ₊ ; φ₋ off the fixed points]`.
    pub fn to_coefficients(&self, s: &SpinorState) -> Result<ComplexVector> {
        let src = self.source().to_coefficients(&self.unfold(s)?)?;
        ComplexVector::from_vec(self.order.iter().map(|&i| src[i]).collect())
    }

    pub fn from_coefficients(&self, c: &ComplexVector) -> Result<SpinorState> {
        if c.dim() != self.dim() {
            return Err(QbcError::DimensionMismatch { expected: self.dim(), found: c.dim() });
        }
        let mut src = vec![ZERO; self.dim()];
        for (k, &i) in self.order.iter().enumerate() {
            src[i] = c[k];
        }
        self.fold(&self.source().from_coefficients(&ComplexVector::from_vec(src)?)?)
    }

    /// Permutation matrix `U` (source coefficients → folded coefficients).
    pub fn unitary(&self) -> Array2<Complex64> {
        let n = self.dim();
        let mut u = Array2::zeros((n, n));
        for (k, &i) in self.order.iter().enumerate() {
            u[[k, i]] = Complex64::new(1.0, 0.0);
        }
        u
    }
}

/// Wavenumber step of the periodic source grid.
fn wavenumber_step(grid: &Grid) -> Result<f64> {
    match grid.kind() {
        GridKind::Circle => Ok(1.0),
        GridKind::TruncatedLine => Ok(2.0 * std::f64::consts::PI / (grid.n_points() as f64 * grid.spacing())),
        GridKind::Interval => Err(QbcError::WrongGridKind { expected: "circle or truncated_line", found: "interval" }),
    }
}

/// FFT helper applying a Fourier multiplier on a periodic grid.
struct FourierMultiplier {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kappa: Vec<f64>,
}

impl FourierMultiplier {
    fn new(grid: &Grid) -> Result<Self> {
        let n = grid.n_points();
        let dk = wavenumber_step(grid)?;
        let mut planner = FftPlanner::new();
        // FFT bin q carries wavenumber q or q - n
        let ks = grid_wavenumbers(n);
        let mut kappa = vec![0.0; n];
        for k in ks {
            kappa[k.rem_euclid(n as i64) as usize] = k as f64 * dk;
        }
        Ok(FourierMultiplier { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), kappa })
    }

    fn apply(&self, v: &[Complex64], symbol: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let n = v.len();
        let mut buf = v.to_vec();
        self.forward.process(&mut buf);
        for (z, &k) in buf.iter_mut().zip(&self.kappa) {
            *z *= symbol(k) / n as f64;
        }
        self.inverse.process(&mut buf);
        buf
    }
}

/// Spectral derivative of node samples on a circle or truncated line.
pub fn spectral_derivative(v: &ComplexVector, grid: &Grid) -> Result<ComplexVector> {
    grid.expect_len(v.dim())?;
    let fm = FourierMultiplier::new(grid)?;
    ComplexVector::from_vec(fm.apply(v.as_slice(), |k| I * k))
}

/// `ψ(x) -> ψ(x - t)` on a periodic grid by Fourier phase multiplication.
pub fn translate(v: &ComplexVector, grid: &Grid, t: f64) -> Result<ComplexVector> {
    grid.expect_len(v.dim())?;
    let fm = FourierMultiplier::new(grid)?;
    ComplexVector::from_vec(fm.apply(v.as_slice(), |k| Complex64::from_polar(1.0, -k * t)))
}

pub fn fold(state: &ComplexVector, grid: &Grid) -> Result<SpinorState> {
    Folding::new(grid)?.fold(state)
}

pub fn unfold(s: &SpinorState, grid: &Grid) -> Result<ComplexVector> {
    Folding::new(grid)?.unfold(s)
}

/// Folded Dirac operator `-iħ d/dy ⊗ σ_z` in folded coefficients, obtained
/// by conjugating the spectral momentum of the source grid with the folding
/// permutation.
pub fn build_dirac(source: &Grid, c: &PhysicalConstants) -> Result<HermitianOperator> {
    let folding = Folding::new(source)?;
    let p = build_periodic_momentum(source, c)?;
    Ok(conjugate(&p, &folding.unitary())?.with_label(format!("dirac {} n={}", source.kind().name(), folding.dim())))
}

/// Dirac matrix assembled column by column from FFT derivatives of the two
/// components: `(-iħ φ₊', +iħ φ₋')` with each component differentiated
/// through its reflection onto the source grid.
pub fn build_dirac_direct(source: &Grid, c: &PhysicalConstants) -> Result<Array2<Complex64>> {
    let folding = Folding::new(source)?;
    let fm = FourierMultiplier::new(source)?;
    let n = folding.dim();
    let h = source.spacing();
    let mut m = Array2::zeros((n, n));
    for col in 0..n {
        let mut e = vec![ZERO; n];
        e[col] = Complex64::new(1.0, 0.0);
        let s = folding.from_coefficients(&ComplexVector::from_vec(e)?)?;
        let psi = folding.unfold(&s)?;
        let d = fm.apply(psi.as_slice(), |k| I * k);
        let ds = folding.fold(&ComplexVector::from_vec(d)?)?;
        let (a, b) = (ds.phi_plus.as_slice(), ds.phi_minus.as_slice());
        let mut row = 0;
        for j in 0..folding.len() {
            m[[row, col]] = -I * c.hbar * a[j] * h.sqrt();
            row += 1;
        }
        for j in 0..folding.len() {
            if !folding.fixed[j] {
                // φ₋(y) = ψ(-y): -iħ ψ'(-y) = +iħ φ₋'(y)
                m[[row, col]] = -I * c.hbar * b[j] * h.sqrt();
                row += 1;
            }
        }
    }
    Ok(m)
}

/// `exp(-i t p̃ / ħ)`: unfold, translate by `t`, fold.
pub fn evolve(s: &SpinorState, t: f64, folding: &Folding) -> Result<SpinorState> {
    let psi = folding.unfold(s)?;
    folding.fold(&translate(&psi, folding.source(), t)?)
}

/// Evolves to every time in `times`, results in input order.
pub fn evolve_series(s: &SpinorState, times: &[f64], folding: &Folding, exec: Execution) -> Result<Vec<SpinorState>> {
    let psi = folding.unfold(s)?;
    let fm = FourierMultiplier::new(folding.source())?;
    exec.map(times.len(), |i| {
        let t = times[i];
        let moved = fm.apply(psi.as_slice(), |k| Complex64::from_polar(1.0, -k * t));
        folding.fold(&ComplexVector::from_vec(moved)?)
    })
    .into_iter()
    .collect()
}

/// Crank–Nicolson steps with the folded Dirac matrix; a cross-check for
/// [`evolve`], second order in the step.
pub fn evolve_crank_nicolson(
    s: &SpinorState,
    t: f64,
    steps: usize,
    folding: &Folding,
    dirac: &HermitianOperator,
    hbar: f64,
) -> Result<SpinorState> {
    if steps == 0 {
        return Err(QbcError::InvalidParameter("need at least one step".into()));
    }
    if dirac.dim() != folding.dim() {
        return Err(QbcError::DimensionMismatch { expected: folding.dim(), found: dirac.dim() });
    }
    let dt = t / steps as f64;
    let a = dirac.matrix() * (I * dt / (2.0 * hbar));
    let eye = Array2::<Complex64>::eye(dirac.dim());
    let lu = LuFactors::factor(&(&eye + &a))?;
    let rhs = &eye - &a;
    let mut x: Array1<Complex64> = folding.to_coefficients(s)?.into_array();
    for _ in 0..steps {
        x = lu.solve(&rhs.dot(&x));
    }
    folding.from_coefficients(&ComplexVector::new(x)?)
}

/// Reduced 2×2 spin density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinDensityMatrix(pub [[Complex64; 2]; 2]);

impl SpinDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.0[0][0].re + self.0[1][1].re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, d]] = self.0;
        let mean = 0.5 * (a.re + d.re);
        let r = (0.25 * (a.re - d.re).powi(2) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    pub fn coherence(&self) -> f64 {
        self.0[0][1].norm()
    }

    /// Checks Hermiticity, unit trace and eigenvalue range.
    pub fn validate(&self) -> Result<()> {
        let m = self.0;
        let herm = (m[0][1] - m[1][0].conj()).norm().max(m[0][0].im.abs()).max(m[1][1].im.abs());
        if herm > 1e-12 {
            return Err(QbcError::NotHermitian { row: 0, col: 1, deviation: herm });
        }
        if (self.trace() - 1.0).abs() > 1e-10 {
            return Err(QbcError::NotNormalized { norm: self.trace() });
        }
        let [lo, hi] = self.eigenvalues();
        if lo < -1e-10 || hi > 1.0 + 1e-10 {
            return Err(QbcError::InvalidParameter(format!("density eigenvalues ({lo}, {hi}) outside [0, 1]")));
        }
        Ok(())
    }
}

/// Traces out position: `ρ_ab = ⟨φ_b, φ_a⟩`.
pub fn spin_density(s: &SpinorState) -> Result<SpinDensityMatrix> {
    let norm = s.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(QbcError::NotNormalized { norm });
    }
    let w = &s.weights;
    let (p, m) = (&s.phi_plus, &s.phi_minus);
    let pp = p.weighted_dot(p, w);
    let mm = m.weighted_dot(m, w);
    let mp = m.weighted_dot(p, w);
    let rho = SpinDensityMatrix([[pp, mp], [mp.conj(), mm]]);
    rho.validate()?;
    Ok(rho)
}

/// Von Neumann entropy in nats.
pub fn entanglement_entropy(rho: &SpinDensityMatrix) -> f64 {
    rho.eigenvalues().iter().map(|&l| l.clamp(0.0, 1.0)).filter(|&l| l > 0.0).map(|l| -l * l.ln()).sum::<f64>().max(0.0)
}

/// `L - y₀ - 8σ`: last time a packet from `y₀` stays clear of the far end.
pub fn validity_window(y0: f64, sigma: f64, length: f64) -> f64 {
    length - y0 - 8.0 * sigma
}

/// Unit-norm Gaussian `e^{-(y-y₀)²/2σ²}` sampled on the folded nodes.
pub fn gaussian_component(folding: &Folding, y0: f64, sigma: f64) -> Result<ComplexVector> {
    let v: Vec<Complex64> = folding
        .nodes()
        .iter()
        .map(|&y| Complex64::new((-(y - y0).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0))
        .collect();
    let v = ComplexVector::from_vec(v)?;
    let n = v.weighted_norm(folding.weights());
    ComplexVector::new(v.as_array() / Complex64::new(n, 0.0))
}
