//! Analytic reference spectra and small independent cross-checks.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbcError, Result};
use crate::numerics::{bisection_root, hermitian_eigenvalues, HermitianOperator};
use crate::operators::PhysicalConstants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpectrumFamily {
    CircleLaplacian,
    Dirichlet,
    Neumann,
    /// `ψ'(0) = μ₀ψ(0)`, `ψ'(π) = -μ_π ψ(π)`; infinite values mean Dirichlet.
    Robin {
        mu0: f64,
        mupi: f64,
    },
    Twisted {
        alpha: f64,
    },
    CircleMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOracle {
    #[serde(flatten)]
    pub family: SpectrumFamily,
    pub levels: usize,
}

impl SpectrumOracle {
    pub fn new(family: SpectrumFamily, levels: usize) -> Self {
        SpectrumOracle { family, levels }
    }
}

/// Lowest `levels` eigenvalues of the continuum operator, ascending. For the
/// circle momentum the levels are the `levels` integers centred on zero
/// (`-⌊(L-1)/2⌋ ..= ⌈(L-1)/2⌉`).
pub fn analytic_spectrum(o: &SpectrumOracle, c: &PhysicalConstants) -> Result<Vec<f64>> {
    c.validate()?;
    let levels = o.levels;
    if levels == 0 {
        return Err(QbcError::InvalidParameter("oracle needs at least one level".into()));
    }
    let scale = c.kinetic_scale();
    let sq = |k: f64| scale * k * k;
    Ok(match o.family {
        SpectrumFamily::Dirichlet => (1..=levels).map(|n| sq(n as f64)).collect(),
        SpectrumFamily::Neumann => (0..levels).map(|n| sq(n as f64)).collect(),
        SpectrumFamily::CircleLaplacian => (0..levels).map(|i| sq(i.div_ceil(2) as f64)).collect(),
        SpectrumFamily::CircleMomentum => {
            let lo = -(((levels - 1) / 2) as i64);
            (0..levels as i64).map(|i| c.hbar * (lo + i) as f64).collect()
        }
        SpectrumFamily::Twisted { alpha } => {
            if !alpha.is_finite() {
                return Err(QbcError::InvalidParameter(format!("twist angle {alpha}")));
            }
            let shift = alpha.rem_euclid(2.0 * PI) / PI;
            let span = levels as i64 + 1;
            let mut all: Vec<f64> = (-span..=span).map(|n| sq(2.0 * n as f64 + shift)).collect();
            all.sort_by(f64::total_cmp);
            all.truncate(levels);
            all
        }
        SpectrumFamily::Robin { mu0, mupi } => robin_wavenumbers(mu0, mupi, levels)?.into_iter().map(sq).collect(),
    })
}

/// `(p, q)` with `p ψ' = q ψ`, normalized; `μ = ∞` gives `(0, 1)`.
fn robin_pair(mu: f64) -> Result<(f64, f64)> {
    if mu.is_nan() || mu < 0.0 {
        return Err(QbcError::InvalidParameter(format!("Robin parameter must be non-negative, got {mu}")));
    }
    if mu.is_infinite() {
        return Ok((0.0, 1.0));
    }
    let r = mu.hypot(1.0);
    Ok((1.0 / r, mu / r))
}

/// Robin secular function divided by `k`, with its limit at `k = 0`.
pub fn robin_secular(k: f64, mu0: f64, mupi: f64) -> Result<f64> {
    let (p0, q0) = robin_pair(mu0)?;
    let (pp, qp) = robin_pair(mupi)?;
    let s = pp * q0 + qp * p0;
    let sinc = if k.abs() < 1e-8 { PI * (1.0 - (k * PI).powi(2) / 6.0) } else { (k * PI).sin() / k };
    Ok(-p0 * pp * k * (k * PI).sin() + s * (k * PI).cos() + q0 * qp * sinc)
}

/// Wavenumbers `k_j ∈ [j, j+1]` of the Robin problem (`k₀ = 0` for Neumann).
pub fn robin_wavenumbers(mu0: f64, mupi: f64, levels: usize) -> Result<Vec<f64>> {
    let (p0, q0) = robin_pair(mu0)?;
    let (pp, qp) = robin_pair(mupi)?;
    if q0 == 0.0 && qp == 0.0 {
        return Ok((0..levels).map(|n| n as f64).collect());
    }
    if p0 == 0.0 && pp == 0.0 {
        return Ok((1..=levels).map(|n| n as f64).collect());
    }
    (0..levels)
        .map(|j| {
            let (lo, hi) = (j as f64, j as f64 + 1.0);
            let f = |k: f64| robin_secular(k, mu0, mupi).unwrap_or(f64::NAN);
            bisection_root(f, lo, hi, 1e-14)
                .map_err(|e| QbcError::BracketFailure { branch: j, reason: format!("[{lo}, {hi}]: {e}") })
        })
        .collect()
}

/// Entropy of `λ± = (1 ± e^{-t²/σ²})/2` in nats.
pub fn gaussian_entropy(t: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(QbcError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let o = (-(t * t) / (sigma * sigma)).exp();
    Ok([(1.0 + o) / 2.0, (1.0 - o) / 2.0].iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum())
}

pub const BRUTE_FORCE_MAX_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceReport {
    pub reference: Vec<f64>,
    pub solver: Vec<f64>,
    pub max_deviation: f64,
}

/// Number of eigenvalues below `x`: negative pivots of the `LDL^H`
/// factorization of `A - xI`, i.e. sign changes of the leading principal
/// minors of the characteristic matrix.
fn count_below(a: &Array2<Complex64>, x: f64, tiny: f64) -> usize {
    let n = a.nrows();
    let mut m = a.clone();
    for i in 0..n {
        m[[i, i]] -= x;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut d = m[[k, k]].re;
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[[i, k]] / d;
            for j in k + 1..n {
                let t = m[[k, j]];
                m[[i, j]] -= f * t;
            }
        }
    }
    negatives
}

/// Recomputes the spectrum of a small operator by bisection on the
/// eigenvalue count and compares with the main eigensolver.
pub fn brute_force_check(op: &HermitianOperator) -> Result<BruteForceReport> {
    let n = op.dim();
    if n > BRUTE_FORCE_MAX_DIM {
        return Err(QbcError::InvalidParameter(format!(
            "brute-force check supports dim <= {BRUTE_FORCE_MAX_DIM}, got {n}"
        )));
    }
    let a = op.matrix();
    let radius = (0..n).map(|i| (0..n).map(|j| a[[i, j]].norm()).sum::<f64>()).fold(0.0, f64::max).max(1e-300);
    let tiny = 1e-300;
    let reference: Vec<f64> = (0..n)
        .map(|j| {
            // smallest x with more than j eigenvalues below it
            let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(a, mid, tiny) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let solver = hermitian_eigenvalues(op)?;
    let max_deviation = reference.iter().zip(&solver).map(|(r, s)| (r - s).abs()).fold(0.0, f64::max);
    Ok(BruteForceReport { reference, solver, max_deviation })
}
