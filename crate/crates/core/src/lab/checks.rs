//! Spectral gap, ordering chain and Fermi–Dirac tail measurements.

use crate::error::{Error, Result};
use crate::math;
use crate::scf::{self, fermi_dirac, FirstLevelSolution, SPSolution, Statistics};
use crate::spectrum;

/// Slack of the ordering chain.
pub const CHAIN_SLACK: f64 = 1e-8;

/// `E_2[Ũ] − E_1[Ũ]` from a two-level diagonalization.
pub fn gap_of(first: &FirstLevelSolution) -> Result<f64> {
    let spec = spectrum::solve_spectrum(&first.potential, 2)?;
    Ok(spec.energy(2) - spec.energy(1))
}

pub fn spectral_gap(eps: f64, n: usize, tol: f64) -> Result<f64> {
    let first = scf::solve_first_level(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    gap_of(&first).map_err(|e| e.at_epsilon(eps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderingReport {
    pub epsilon: f64,
    /// `J̃(Ũ)`.
    pub first_at_first: f64,
    /// `J̃(U)`.
    pub first_at_full: f64,
    /// `J(U)`.
    pub full_at_full: f64,
    /// `J(Ũ)`.
    pub full_at_first: f64,
    /// `J̃(Ũ) ≤ J̃(U) ≤ J(U) ≤ J(Ũ)` up to [`CHAIN_SLACK`].
    pub verdict: bool,
    /// `ε² log(1 + Σ_{p≥2} e^{−(E_p − E_1)/ε²})` at `Ũ`.
    pub excited_term: f64,
    /// `|J(Ũ) − J̃(Ũ) − excited_term|`.
    pub identity_residual: f64,
    /// `E_2 − E_1` at `Ũ`.
    pub gap: f64,
    /// Levels entering `J(Ũ)`.
    pub levels: usize,
}

pub fn ordering_from(full: &SPSolution, first: &FirstLevelSolution) -> Result<OrderingReport> {
    let eps = first.epsilon;
    let grid = *first.potential.grid();
    let first_at_first = first.functional_value;
    let first_at_full = scf::dirichlet_energy(full.potential.function()) - full.spectrum.energy(1);
    let full_at_full = full.functional_value;
    let (spec, occ) = scf::resolve_levels(&first.potential, eps, Statistics::Boltzmann, 4)?;
    let full_at_first = scf::evaluate_functional_full(&first.potential, eps, &grid, Statistics::Boltzmann)?;
    let e1 = spec.energy(1);
    let e2 = eps * eps;
    let series: f64 = spec.energies()[1..occ.levels_used()]
        .iter()
        .map(|e| math::exp(-(e - e1) / e2))
        .sum();
    let excited_term = e2 * math::ln_1p(series);
    let identity_residual = ((full_at_first - first_at_first) - excited_term).abs();
    let s = CHAIN_SLACK;
    let verdict = first_at_first <= first_at_full + s
        && first_at_full <= full_at_full + s
        && full_at_full <= full_at_first + s;
    Ok(OrderingReport {
        epsilon: eps,
        first_at_first,
        first_at_full,
        full_at_full,
        full_at_first,
        verdict,
        excited_term,
        identity_residual,
        gap: spec.energy(2) - e1,
        levels: occ.levels_used(),
    })
}

pub fn energy_ordering_check(eps: f64, n: usize, tol: f64) -> Result<OrderingReport> {
    let first = scf::solve_first_level(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    let full = scf::solve_full_boltzmann(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    ordering_from(&full, &first).map_err(|e| e.at_epsilon(eps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FdTail {
    pub epsilon: f64,
    /// `Σ_{p≥2} f(x_p) / f(x_1)` with `x_p = (E_p − ε_F)/ε²`.
    pub ratio: f64,
    /// `|Σ_p f(x_p) − ε^{−3}| ε³`.
    pub constraint_residual: f64,
    pub fermi_level: f64,
    pub levels: usize,
}

pub fn fd_tail_from(sol: &SPSolution) -> Result<FdTail> {
    let occ = &sol.occupation;
    let mu = occ
        .fermi_level()
        .ok_or_else(|| Error::invalid("solution does not use Fermi–Dirac statistics"))?;
    let eps = sol.epsilon;
    let e2 = eps * eps;
    let f: alloc::vec::Vec<f64> = sol.spectrum.energies()[..occ.levels_used()]
        .iter()
        .map(|e| fermi_dirac((e - mu) / e2))
        .collect();
    let total: f64 = f.iter().sum();
    let target = 1.0 / (e2 * eps);
    Ok(FdTail {
        epsilon: eps,
        ratio: f[1..].iter().sum::<f64>() / f[0],
        constraint_residual: (total - target).abs() / target,
        fermi_level: mu,
        levels: occ.levels_used(),
    })
}

pub fn fd_tail_ratio(eps: f64, n: usize, tol: f64) -> Result<FdTail> {
    let sol = scf::solve_full_fermi_dirac(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    fd_tail_from(&sol).map_err(|e| e.at_epsilon(eps))
}
