//! Parity-compatible grids on the circle, the interval `[0, π]` and a
//! truncated line `[-L, L]`.
//!
//! Nodes are placed so that `x -> -x` maps nodes onto nodes exactly. Vectors
//! on a grid are node samples; inner products carry the grid's quadrature
//! weights ([`Grid::weights`]). Operators are stored in the orthonormal
//! coefficient basis `c_j = sqrt(w_j) ψ_j` (see [`Grid::to_coefficients`]).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QbcError, Result};
use crate::numerics::ComplexVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Circle,
    Interval,
    TruncatedLine,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Circle => "circle",
            GridKind::Interval => "interval",
            GridKind::TruncatedLine => "truncated_line",
        }
    }
}

/// Grid description as it appears in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    /// Circle: number of nodes `N`. Interval: number of cells `N` (nodes
    /// `N + 1`). Truncated line: half-count `M` (nodes `2M + 1`).
    pub n: usize,
    /// Half-length `L` of a truncated line; ignored otherwise.
    #[serde(default)]
    pub length: Option<f64>,
}

/// Default half-length of the truncated line.
pub const DEFAULT_LINE_LENGTH: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    n: usize,
    spacing: f64,
    nodes: Vec<f64>,
}

pub fn make_grid(spec: &GridSpec) -> Result<Grid> {
    match spec.kind {
        GridKind::Circle => Grid::circle(spec.n),
        GridKind::Interval => Grid::interval(spec.n),
        GridKind::TruncatedLine => Grid::truncated_line(spec.n, spec.length.unwrap_or(DEFAULT_LINE_LENGTH)),
    }
}

impl Grid {
    /// `N` nodes `x_j = -π + j h`, `h = 2π/N`; `N` must be even and ≥ 4.
    pub fn circle(n: usize) -> Result<Grid> {
        if n < 4 {
            return Err(QbcError::InvalidGrid(format!("circle needs at least 4 nodes, got {n}")));
        }
        if !n.is_multiple_of(2) {
            return Err(QbcError::InvalidGrid(format!(
                "circle node count must be even for an exact parity map, got {n}"
            )));
        }
        let h = 2.0 * PI / n as f64;
        let half = (n / 2) as f64;
        let nodes = (0..n).map(|j| if j == 0 { -PI } else { (j as f64 - half) * h }).collect();
        Ok(Grid { kind: GridKind::Circle, n, spacing: h, nodes })
    }

    /// `N + 1` nodes `y_j = j h`, `h = π/N`, endpoints included; `N ≥ 4`.
    pub fn interval(n: usize) -> Result<Grid> {
        if n < 4 {
            return Err(QbcError::InvalidGrid(format!("interval needs at least 4 cells, got {n}")));
        }
        let h = PI / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        nodes[n] = PI;
        Ok(Grid { kind: GridKind::Interval, n, spacing: h, nodes })
    }

    /// `2M + 1` nodes `x_j = -L + j h`, `h = L/M`.
    pub fn truncated_line(m: usize, length: f64) -> Result<Grid> {
        if m < 1 {
            return Err(QbcError::InvalidGrid("truncated line needs M ≥ 1".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(QbcError::InvalidGrid(format!("line half-length must be positive, got {length}")));
        }
        let h = length / m as f64;
        // Symmetric construction keeps x_{2M-j} = -x_j bit-exact.
        let nodes = (0..=2 * m)
            .map(|j| {
                let k = j as i64 - m as i64;
                k as f64 * h
            })
            .collect();
        Ok(Grid { kind: GridKind::TruncatedLine, n: m, spacing: h, nodes })
    }

    /// Circle grid whose non-negative nodes coincide with `interval`'s nodes.
    pub fn matched_circle(interval: &Grid) -> Result<Grid> {
        interval.expect_kind(GridKind::Interval)?;
        Grid::circle(2 * interval.n)
    }

    /// Interval grid matched to a circle grid (`N_circle = 2 N_interval`).
    pub fn matched_interval(circle: &Grid) -> Result<Grid> {
        circle.expect_kind(GridKind::Circle)?;
        Grid::interval(circle.n / 2)
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// The size parameter the grid was built from.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn expect_kind(&self, kind: GridKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(QbcError::WrongGridKind { expected: kind.name(), found: self.kind.name() })
        }
    }

    pub(crate) fn expect_len(&self, len: usize) -> Result<()> {
        if len == self.n_points() {
            Ok(())
        } else {
            Err(QbcError::DimensionMismatch { expected: self.n_points(), found: len })
        }
    }

    /// Quadrature weights: uniform `h` on the circle and truncated line,
    /// trapezoidal on the interval.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing;
        let mut w = vec![h; self.n_points()];
        if self.kind == GridKind::Interval {
            w[0] = 0.5 * h;
            let last = w.len() - 1;
            w[last] = 0.5 * h;
        }
        w
    }

    /// Samples a function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> ComplexVector {
        ComplexVector::from_vec(self.nodes.iter().map(|&x| f(x)).collect()).expect("sampled function must be finite")
    }

    pub fn sample_real(&self, f: impl Fn(f64) -> f64) -> ComplexVector {
        self.sample(|x| Complex64::new(f(x), 0.0))
    }

    pub fn norm(&self, v: &ComplexVector) -> f64 {
        v.weighted_norm(&self.weights())
    }

    pub fn inner(&self, a: &ComplexVector, b: &ComplexVector) -> Complex64 {
        a.weighted_dot(b, &self.weights())
    }

    /// Node samples → orthonormal coefficients `sqrt(w_j) ψ_j`.
    pub fn to_coefficients(&self, v: &ComplexVector) -> Result<ComplexVector> {
        self.expect_len(v.dim())?;
        let w = self.weights();
        ComplexVector::from_vec(v.as_slice().iter().zip(&w).map(|(z, w)| z * w.sqrt()).collect())
    }

    pub fn from_coefficients(&self, c: &ComplexVector) -> Result<ComplexVector> {
        self.expect_len(c.dim())?;
        let w = self.weights();
        ComplexVector::from_vec(c.as_slice().iter().zip(&w).map(|(z, w)| z / w.sqrt()).collect())
    }

    /// Index of the node at `x` (circle coordinates taken modulo 2π).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let h = self.spacing;
        let raw = match self.kind {
            GridKind::Circle => {
                let t = (x + PI).rem_euclid(2.0 * PI) / h;
                (t.round() as usize) % self.n
            }
            GridKind::Interval => (x / h).round() as usize,
            GridKind::TruncatedLine => ((x + self.nodes[self.n_points() - 1]) / h).round() as usize,
        };
        (raw < self.n_points()).then_some(raw)
    }
}

/// Involutive permutation of node indices induced by `x -> -x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn fixed_points(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(i, j)| i == *j).map(|(i, _)| i).collect()
    }

    /// Applies to a vector: `(P v)_i = v_{π(i)}`.
    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.dim() != self.len() {
            return Err(QbcError::DimensionMismatch { expected: self.len(), found: v.dim() });
        }
        ComplexVector::from_vec(self.0.iter().map(|&j| v[j]).collect())
    }
}

pub fn parity_permutation(grid: &Grid) -> Result<Permutation> {
    let n = grid.n_points();
    match grid.kind {
        GridKind::Circle => Ok(Permutation((0..n).map(|j| (n - j) % n).collect())),
        GridKind::TruncatedLine => Ok(Permutation((0..n).map(|j| n - 1 - j).collect())),
        GridKind::Interval => {
            Err(QbcError::WrongGridKind { expected: "circle or truncated_line", found: GridKind::Interval.name() })
        }
    }
}

/// Node pairing used by the folding maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldIndexMap {
    source: Grid,
    /// Nodes `y_j ≥ 0` of the folded domain.
    target_nodes: Vec<f64>,
    /// Quadrature weights on the folded domain; fixed points carry half weight.
    target_weights: Vec<f64>,
    /// `(index of y_j, index of -y_j)` in the source grid.
    pairs: Vec<(usize, usize)>,
}

impl FoldIndexMap {
    pub fn new(source: &Grid) -> Result<Self> {
        let h = source.spacing;
        let (pairs, nodes): (Vec<(usize, usize)>, Vec<f64>) = match source.kind {
            GridKind::Circle => {
                let n = source.n_points();
                let half = n / 2;
                (0..=half)
                    .map(|k| {
                        let pos = (half + k) % n;
                        let neg = (half + n - k) % n;
                        ((pos, neg), if k == half { PI } else { k as f64 * h })
                    })
                    .unzip()
            }
            GridKind::TruncatedLine => {
                let m = source.n;
                (0..=m).map(|k| ((m + k, m - k), source.nodes[m + k])).unzip()
            }
            GridKind::Interval => {
                return Err(QbcError::WrongGridKind {
                    expected: "circle or truncated_line",
                    found: GridKind::Interval.name(),
                })
            }
        };
        let weights = pairs.iter().map(|&(p, q)| if p == q { 0.5 * h } else { h }).collect();
        Ok(FoldIndexMap { source: source.clone(), target_nodes: nodes, target_weights: weights, pairs })
    }

    pub fn source(&self) -> &Grid {
        &self.source
    }

    pub fn target_nodes(&self) -> &[f64] {
        &self.target_nodes
    }

    pub fn target_weights(&self) -> &[f64] {
        &self.target_weights
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Folded positions whose two source nodes coincide.
    pub fn fixed_positions(&self) -> Vec<usize> {
        self.pairs.iter().enumerate().filter(|(_, (p, q))| p == q).map(|(i, _)| i).collect()
    }
}
