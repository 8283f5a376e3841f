//! Numerical core of the one-dimensional Schrödinger–Poisson laboratory.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides
//!
//! - uniform grids, trapezoid quadrature and discrete Sobolev norms ([`grid`]),
//! - symmetric tridiagonal solvers ([`tridiag`]) and exponential rate fits ([`rate`]),
//! - the Dirichlet Schrödinger operator and its lowest eigenpairs ([`spectrum`]),
//! - the Poisson problem with `U(0) = 0`, `U'(L) = 0` ([`poisson`]),
//! - self-consistent solvers on the scaled interval `[0, 1/ε]` ([`scf`]),
//! - the half-line boundary-layer problem ([`halfline`]),
//! - ε-sweeps comparing all of the above ([`lab`]).
//!
//! All lengths and energies are in the scaled variable `ξ = z/ε`; the unscaled
//! quantities on `[0, 1]` are recovered by exact change-of-variable factors.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod grid;
pub mod halfline;
pub mod lab;
pub(crate) mod math;
pub mod poisson;
pub mod rate;
pub mod scf;
pub mod spectrum;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{integrate, norm, Grid, GridFunction, NormKind};
pub use rate::{fit_exponential_rate, RateFit};
pub use spectrum::{Potential, RightBoundary, Spectrum};
pub use tridiag::{solve_tridiagonal, TridiagonalSystem};
