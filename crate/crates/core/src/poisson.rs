//! `−U″ = ρ` on `[0, L]` with `U(0) = 0` and `U′(L) = 0`.
//!
//! The right end uses a ghost node `U_{n+1} = U_{n−1}`; after halving the last
//! row the matrix is symmetric positive definite and the scheme coincides with
//! the trapezoid discretization of `U(x) = ∫ ρ(ζ) min(x, ζ) dζ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::spectrum::{Potential, RightBoundary};
use crate::tridiag::TridiagonalSystem;

fn check_source(rho: &GridFunction, grid: &Grid) -> Result<()> {
    if rho.grid() != grid {
        return Err(Error::invalid("density is not sampled on the given grid"));
    }
    if let Some(v) = rho.values().iter().find(|&&v| v < -1e-12) {
        return Err(Error::invalid(alloc::format!("density must be nonnegative, found {v:e}")));
    }
    Ok(())
}

pub fn solve_poisson(rho: &GridFunction, grid: &Grid) -> Result<Potential> {
    check_source(rho, grid)?;
    solve_poisson_signed(rho, grid)
}

/// [`solve_poisson`] without the sign check on the source.
pub fn solve_poisson_signed(rho: &GridFunction, grid: &Grid) -> Result<Potential> {
    if rho.grid() != grid {
        return Err(Error::invalid("density is not sampled on the given grid"));
    }
    let values = poisson_values(rho.values(), grid.h())?;
    Ok(Potential::new(
        GridFunction::from_vec(*grid, values),
        RightBoundary::NeumannZero,
    ))
}

pub(crate) fn poisson_values(rho: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = rho.len() - 1;
    let inv_h2 = 1.0 / (h * h);
    let mut diag = vec![2.0 * inv_h2; n];
    diag[n - 1] = inv_h2;
    let sys = TridiagonalSystem::new(diag, vec![-inv_h2; n - 1])?;
    let mut rhs = rho[1..].to_vec();
    rhs[n - 1] *= 0.5;
    let u = sys.solve(&rhs)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    out.extend(u);
    Ok(out)
}

/// Direct `O(n²)` trapezoid evaluation of `U(x_i) = ∫ ρ(ζ) min(x_i, ζ) dζ`.
pub fn greens_kernel_apply(rho: &GridFunction, grid: &Grid) -> Result<Potential> {
    check_source(rho, grid)?;
    let r = rho.values();
    let values = grid
        .nodes()
        .map(|x| {
            grid.nodes()
                .enumerate()
                .map(|(j, z)| grid.weight(j) * r[j] * x.min(z))
                .sum()
        })
        .collect();
    Ok(Potential::new(
        GridFunction::from_vec(*grid, values),
        RightBoundary::NeumannZero,
    ))
}
