//! Numerical workbench for quantum boundary conditions on one-dimensional
//! domains.
//!
//! Boundary conditions on the interval `[0, π]` are generated three ways:
//!
//! * [`reduction`]: restricting the free particle on the circle to the even
//!   and odd parity sectors gives the Neumann and Dirichlet Hamiltonians.
//! * [`deformation`]: a coordinate change concentrated near the endpoints
//!   turns Neumann into Robin conditions, with a renormalized bulk mass.
//! * [`folding`]: a unitary map from the circle (or line) onto two copies of
//!   the interval (or half-line) turns the momentum into a Dirac operator with
//!   spin-flip boundary conditions.
//!
//! Everything is discretized on parity-compatible grids ([`grids`]) so the
//! identities hold as exact matrix identities; [`oracles`] provides the
//! independent analytic references.

pub mod deformation;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod folding;
pub mod grids;
pub mod numerics;
pub mod operators;
pub mod oracles;
pub mod reduction;

pub use error::{QbcError, Result};
pub use exec::Execution;
pub use numerics::{ComplexVector, EigenDecomposition, HermitianOperator, Tolerances};
