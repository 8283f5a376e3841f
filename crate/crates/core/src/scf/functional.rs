//! Energy functionals of the bounded-domain problems.
//!
//! - Boltzmann: `J(U) = ½∫|U′|² + ε²·log Σ_p e^{−E_p/ε²}`,
//! - Fermi–Dirac: `J(U) = ½∫|U′|² − ε_F + ε⁵ Σ_p F((E_p − ε_F)/ε²)` with
//!   `F(x) = ∫_x^∞ log(1 + e^{−u}) du` and `ε_F` fixed by the charge constraint,
//! - first level: `J̃(U) = ½∫|U′|² − E_1[U]`,
//! - sphere form: `A(φ) = ∫|φ′|² + ½∫ U(φ) φ²` with `−U(φ)″ = φ²`.

use super::fermi::fd_tail_integral;
use super::occupation::{OccupationSet, Statistics};
use super::solver::resolve_levels;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::poisson;
use crate::spectrum::{self, Potential};

/// `½ ∫ |U′|²`.
pub fn dirichlet_energy(u: &GridFunction) -> f64 {
    0.5 * grid::semi_squared(u.values(), u.grid().h())
}

/// The statistics-dependent part of the full functional.
pub(crate) fn statistical_term(occ: &OccupationSet, energies: &[f64]) -> f64 {
    let eps = occ.epsilon();
    let e2 = eps * eps;
    match occ.statistics() {
        Statistics::Boltzmann => e2 * occ.log_partition().unwrap_or(f64::NAN),
        Statistics::FermiDirac => {
            let mu = occ.fermi_level().unwrap_or(f64::NAN);
            let tail: f64 = energies[..occ.levels_used()]
                .iter()
                .map(|&e| fd_tail_integral((e - mu) / e2))
                .sum();
            -mu + e2 * e2 * eps * tail
        }
    }
}

fn check_potential(u: &Potential, grid: &Grid) -> Result<()> {
    if u.grid() != grid {
        return Err(Error::invalid("potential is not sampled on the given grid"));
    }
    if u.values()[0].abs() > 1e-12 {
        return Err(Error::invalid("admissible potentials vanish at the left end"));
    }
    Ok(())
}

/// Full functional with the level series resolved to [`super::LEVEL_CUTOFF`].
pub fn evaluate_functional_full(u: &Potential, eps: f64, grid: &Grid, statistics: Statistics) -> Result<f64> {
    check_potential(u, grid)?;
    super::occupation::check_epsilon(eps)?;
    let (spec, occ) = resolve_levels(u, eps, statistics, 4)?;
    Ok(dirichlet_energy(u.function()) + statistical_term(&occ, spec.energies()))
}

/// `J̃(U) = ½∫|U′|² − E_1[U]`.
pub fn evaluate_functional_first(u: &Potential, grid: &Grid) -> Result<f64> {
    check_potential(u, grid)?;
    let spec = spectrum::solve_spectrum(u, 1)?;
    Ok(dirichlet_energy(u.function()) - spec.energy(1))
}

/// `A(φ) = ∫|φ′|² + ½ ∫ U(φ) φ²`, with `U(φ)` the Poisson potential of `φ²`.
pub fn evaluate_sphere_functional(phi: &GridFunction) -> Result<f64> {
    let rho: alloc::vec::Vec<f64> = phi.values().iter().map(|v| v * v).collect();
    let h = phi.grid().h();
    let u = poisson::poisson_values(&rho, h)?;
    Ok(sphere_value(phi.values(), &u, h))
}

pub(crate) fn sphere_value(phi: &[f64], u: &[f64], h: f64) -> f64 {
    let coupling: alloc::vec::Vec<f64> = phi.iter().zip(u).map(|(p, v)| v * p * p).collect();
    grid::semi_squared(phi, h) + 0.5 * grid::trapezoid(&coupling, h)
}
