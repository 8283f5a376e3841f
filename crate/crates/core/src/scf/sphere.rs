//! Minimization of `A(φ) = ∫|φ′|² + ½∫U(φ)φ²` over unit-norm states by a
//! normalized backward-Euler gradient flow
//! `φ ← |(I + τ H[U(φ)])^{-1} φ| / ‖·‖`, with `τ` adapted so that `A` never
//! increases. Large `τ` turns the step into an inverse iteration, so the flow
//! ends up converging at the rate of the spectral gap.

use alloc::vec::Vec;

use super::functional::{dirichlet_energy, sphere_value};
use super::solver::FirstLevelSolution;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::math;
use crate::poisson;
use crate::spectrum::{self, Potential, RightBoundary};
use crate::tridiag::TridiagonalSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereOptions {
    /// Target for the eigen-residual `‖H[U(φ)]φ − μφ‖_{L²}`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting state; the Dirichlet box ground state when absent.
    pub initial: Option<GridFunction>,
}

impl SphereOptions {
    pub fn new(tol: f64) -> Self {
        SphereOptions {
            tol,
            max_iterations: 2000,
            initial: None,
        }
    }
}

const MAX_TIME_STEP: f64 = 1e8;

/// First-level solution on `[0, domain_length]` through the sphere formulation.
pub fn minimize_sphere_functional(domain_length: f64, n: usize, tol: f64) -> Result<FirstLevelSolution> {
    minimize_sphere_functional_with(domain_length, n, &SphereOptions::new(tol))
}

fn normalize_abs(v: &mut [f64], h: f64) -> Result<()> {
    v.iter_mut().for_each(|x| *x = x.abs());
    let n = v.len();
    v[0] = 0.0;
    v[n - 1] = 0.0;
    let nrm = math::sqrt(grid::l2_squared(v, h));
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::invalid("state has zero norm"));
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    Ok(())
}

fn potential_of(phi: &[f64], h: f64) -> Result<Vec<f64>> {
    let rho: Vec<f64> = phi.iter().map(|v| v * v).collect();
    poisson::poisson_values(&rho, h)
}

/// `‖Hφ − μφ‖_{L²}` and `μ` for a normalized `φ` vanishing at both ends.
fn eigen_residual(phi: &[f64], u: &[f64], h: f64) -> (f64, f64) {
    let mu = spectrum::rayleigh_quotient(u, phi, h);
    let inv_h2 = 1.0 / (h * h);
    let n = phi.len() - 1;
    let sq: f64 = (1..n)
        .map(|i| {
            let hp = (2.0 * phi[i] - phi[i - 1] - phi[i + 1]) * inv_h2 + u[i] * phi[i];
            let r = hp - mu * phi[i];
            r * r
        })
        .sum();
    (math::sqrt(h * sq), mu)
}

pub fn minimize_sphere_functional_with(
    domain_length: f64,
    n: usize,
    opts: &SphereOptions,
) -> Result<FirstLevelSolution> {
    let grid = Grid::new(domain_length, n)?;
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let h = grid.h();
    let mut phi: Vec<f64> = match &opts.initial {
        Some(f) if f.grid() == &grid => f.values().to_vec(),
        Some(f) => f.resample(grid).into_values(),
        None => grid
            .nodes()
            .map(|x| math::sin(core::f64::consts::PI * x / domain_length))
            .collect(),
    };
    normalize_abs(&mut phi, h)?;
    let mut u = potential_of(&phi, h)?;
    let mut value = sphere_value(&phi, &u, h);
    let mut history = alloc::vec![value];
    let mut tau: f64 = 1.0;
    let inv_h2 = 1.0 / (h * h);
    let mut residual;
    let mut it = 0;
    loop {
        let (res, mu) = eigen_residual(&phi, &u, h);
        residual = res;
        if residual <= opts.tol {
            let pot = Potential::new(GridFunction::from_vec(grid, u), RightBoundary::NeumannZero);
            let e1 = spectrum::solve_spectrum(&pot, 1)?.energy(1);
            return Ok(FirstLevelSolution {
                epsilon: 1.0 / domain_length,
                e1,
                psi1: GridFunction::from_vec(grid, phi),
                multiplier: mu,
                functional_value: dirichlet_energy(pot.function()) - e1,
                residual,
                iterations: it,
                functional_history: history,
                potential: pot,
            });
        }
        if it == opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations: it,
                residual,
            });
        }
        let slack = 1e-14 * (1.0 + value.abs());
        loop {
            let diag = (1..n).map(|i| 1.0 + tau * (2.0 * inv_h2 + u[i])).collect();
            let sys = TridiagonalSystem::new(diag, alloc::vec![-tau * inv_h2; n - 2])?;
            let inner = sys.solve(&phi[1..n])?;
            let mut next = Vec::with_capacity(n + 1);
            next.push(0.0);
            next.extend(inner);
            next.push(0.0);
            normalize_abs(&mut next, h)?;
            let next_u = potential_of(&next, h)?;
            let next_value = sphere_value(&next, &next_u, h);
            if next_value <= value + slack {
                phi = next;
                u = next_u;
                value = next_value;
                history.push(value);
                tau = (2.0 * tau).min(MAX_TIME_STEP);
                break;
            }
            tau *= 0.25;
            if tau < 1e-12 {
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual,
                });
            }
        }
        it += 1;
    }
}
