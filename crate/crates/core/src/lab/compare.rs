//! Distances between the full, first-level and limit potentials.
//!
//! Everything is measured on the scaled interval `[0, M_ε]`, `M_ε = 1/ε`.
//! With `V(z) = ε^{−2} U(z/ε)` the unscaled norm on `[0, 1]` follows exactly:
//! `‖V‖²_{H¹(0,1)} = ε^{−5} ∫|U′|² dξ + ε^{−3} ∫ U² dξ`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, GridFunction};
use crate::halfline::LimitSolution;
use crate::math;
use crate::poisson;
use crate::scf::{self, FirstLevelSolution, SPSolution};
use crate::spectrum::{self, Spectrum};
use crate::tridiag::TridiagonalSystem;

/// Squared scaled norms of a difference on `[0, M_ε]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaledDistance {
    pub semi: f64,
    pub l2: f64,
}

impl ScaledDistance {
    pub fn of(diff: &[f64], h: f64) -> Self {
        ScaledDistance {
            semi: math::sqrt(grid::semi_squared(diff, h)),
            l2: math::sqrt(grid::l2_squared(diff, h)),
        }
    }

    pub fn h1(&self) -> f64 {
        math::sqrt(self.semi * self.semi + self.l2 * self.l2)
    }

    /// `‖V − Ṽ‖_{H¹(0,1)}` for `V(z) = ε^{−2}U(z/ε)`.
    pub fn unscaled_h1(&self, eps: f64) -> f64 {
        math::sqrt(
            self.semi * self.semi / math::powf(eps, 5.0) + self.l2 * self.l2 / (eps * eps * eps),
        )
    }
}

/// `‖a − b‖_{H¹}` for two functions on the same grid.
pub fn h1_distance(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    grid::distance(a, b, grid::NormKind::H1)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FullFirstComparison {
    pub epsilon: f64,
    /// `U_ε − Ũ_ε` by subtracting the two converged solutions; limited by the
    /// solver tolerances.
    pub direct: ScaledDistance,
    /// First-order difference `(I − Pχ)^{−1} P S`, see [`resolved_difference`].
    pub resolved: ScaledDistance,
    pub resolved_unscaled_h1: f64,
    /// Levels entering the excited-state source `S`.
    pub levels: usize,
}

/// Solves both problems at `(eps, n, tol)` and compares them.
pub fn compare_full_vs_first(eps: f64, n: usize, tol: f64) -> Result<FullFirstComparison> {
    let first = scf::solve_first_level(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    let full = scf::solve_full_boltzmann(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    compare_full_first_solutions(&full, &first).map_err(|e| e.at_epsilon(eps))
}

pub fn compare_full_first_solutions(
    full: &SPSolution,
    first: &FirstLevelSolution,
) -> Result<FullFirstComparison> {
    if full.potential.grid() != first.potential.grid() {
        return Err(Error::invalid("solutions live on different grids"));
    }
    let h = first.potential.grid().h();
    let diff: Vec<f64> = full
        .potential
        .values()
        .iter()
        .zip(first.potential.values())
        .map(|(a, b)| a - b)
        .collect();
    let direct = ScaledDistance::of(&diff, h);
    let (d, levels) = resolved_difference(first)?;
    let resolved = ScaledDistance::of(&d, h);
    Ok(FullFirstComparison {
        epsilon: first.epsilon,
        direct,
        resolved,
        resolved_unscaled_h1: resolved.unscaled_h1(first.epsilon),
        levels,
    })
}

/// The difference `U_ε − Ũ_ε` to first order in the excited occupations.
///
/// With `ρ_full = ψ₁² + S`, `S = Σ_{p≥2} w_p (ψ_p² − ψ₁²)` evaluated at `Ũ_ε`,
/// and `χ(W) = 2ψ₁ dψ₁[W]` the response of the ground-state density, the
/// difference solves `(I − Pχ) D = P S` where `P` is the Poisson solve. The
/// operator is the identity plus a positive semidefinite part in the `H¹`
/// seminorm inner product, so conjugate gradients apply. Unlike a direct
/// subtraction this stays accurate far below the solver tolerance, where
/// `|S| ~ e^{−(E_2 − E_1)/ε²}`.
///
/// Returns the difference and the number of levels in `S`.
pub fn resolved_difference(first: &FirstLevelSolution) -> Result<(Vec<f64>, usize)> {
    let eps = first.epsilon;
    let u = &first.potential;
    let cap = scf::level_cap(u.grid());
    let e2 = eps * eps;
    // excited levels down to 1e−16 of the leading excited weight
    let mut k = 4.min(cap);
    let spec = loop {
        let spec = spectrum::solve_spectrum(u, k)?;
        let spread = (spec.energy(k) - spec.energy(2)) / e2;
        if spread > 37.0 || k == cap {
            break spec;
        }
        k = (2 * k).min(cap);
    };
    let e1 = spec.energy(1);
    let excess: Vec<f64> = spec.energies()[1..].iter().map(|e| -(e - e1) / e2).collect();
    let log_norm = math::ln_1p(excess.iter().map(|&x| math::exp(x)).sum());
    let psi1 = spec.state(1).values();
    let mut s = alloc::vec![0.0; psi1.len()];
    for (p, &x) in excess.iter().enumerate() {
        let w = math::exp(x - log_norm);
        let psi = spec.states()[p + 1].values();
        for (si, (a, b)) in s.iter_mut().zip(psi.iter().zip(psi1)) {
            *si += w * (a * a - b * b);
        }
    }
    let ham = spectrum::assemble_hamiltonian(u, u.grid())?;
    Ok((linear_response(&ham, &spec, &s)?, spec.count()))
}

/// Solves `(I − Pχ) D = P s` by conjugate gradients in the `H¹` seminorm.
pub(crate) fn linear_response(ham: &TridiagonalSystem, spec: &Spectrum, s: &[f64]) -> Result<Vec<f64>> {
    let h = spec.grid().h();
    let psi1 = spec.state(1).values();
    let apply = |w: &[f64]| -> Result<Vec<f64>> {
        let dpsi = spectrum::state_response(ham, spec, 1, w)?;
        let chi: Vec<f64> = dpsi.iter().zip(psi1).map(|(d, p)| 2.0 * p * d).collect();
        let pchi = poisson::poisson_values(&chi, h)?;
        Ok(w.iter().zip(&pchi).map(|(a, b)| a - b).collect())
    };
    let inner = |a: &[f64], b: &[f64]| grid::semi_inner(a, b, h);
    let b = poisson::poisson_values(s, h)?;
    let bb = inner(&b, &b);
    let mut x = alloc::vec![0.0; b.len()];
    if bb == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = bb;
    for _ in 0..200 {
        let ap = apply(&p)?;
        let alpha = rr / inner(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_next = inner(&r, &r);
        if rr_next <= 1e-26 * bb {
            return Ok(x);
        }
        let beta = rr_next / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_next;
    }
    Err(Error::NonConvergence {
        iterations: 200,
        residual: math::sqrt(rr / bb),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FirstLimitComparison {
    pub epsilon: f64,
    /// `Ũ_ε − U_0` on `[0, M_ε]`.
    pub scaled: ScaledDistance,
    /// `‖Ṽ_ε − ε^{−2}U_0(·/ε)‖_{H¹(0,1)}`.
    pub unscaled_h1: f64,
}

/// `U_0` interpolated onto the grid of `first`.
pub fn limit_on_grid(first: &FirstLevelSolution, limit: &LimitSolution) -> Result<GridFunction> {
    let grid = *first.potential.grid();
    if limit.truncation < grid.length() {
        return Err(Error::InvalidConfiguration(alloc::format!(
            "limit truncation {} is shorter than the domain {}",
            limit.truncation,
            grid.length()
        )));
    }
    Ok(limit.potential.function().resample(grid))
}

pub fn compare_first_limit_solutions(
    first: &FirstLevelSolution,
    limit: &LimitSolution,
) -> Result<FirstLimitComparison> {
    let u0 = limit_on_grid(first, limit)?;
    let diff: Vec<f64> = first
        .potential
        .values()
        .iter()
        .zip(u0.values())
        .map(|(a, b)| a - b)
        .collect();
    let scaled = ScaledDistance::of(&diff, first.potential.grid().h());
    Ok(FirstLimitComparison {
        epsilon: first.epsilon,
        scaled,
        unscaled_h1: scaled.unscaled_h1(first.epsilon),
    })
}

/// Solves the first-level problem and the limit problem (same spacing,
/// truncation at least `max(40, 2/ε)`) and compares them.
pub fn compare_first_vs_limit(eps: f64, n: usize, tol: f64) -> Result<FirstLimitComparison> {
    let first = scf::solve_first_level(eps, n, tol).map_err(|e| e.at_epsilon(eps))?;
    let h = first.potential.grid().h();
    let limit = super::sweep::limit_for(&[eps], h, tol, 40.0)?;
    compare_first_limit_solutions(&first, &limit).map_err(|e| e.at_epsilon(eps))
}
