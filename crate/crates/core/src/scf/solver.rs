//! Descent solvers for the bounded-domain systems on `[0, 1/ε]`.
//!
//! Every functional here is convex with `H^{1,0}` gradient `U − Poisson(ρ[U])`,
//! so a single driver serves all of them: an inexact Newton step (conjugate
//! gradients on the Hessian, applied by differencing the gradient) with Armijo
//! backtracking on the functional, falling back to the gradient step
//! `r = Poisson(ρ[U]) − U` when the Newton step does not decrease it.

use alloc::vec::Vec;

use super::functional::{dirichlet_energy, statistical_term};
use super::occupation::{
    charge_density, check_epsilon, truncated_occupation, OccupationSet, Statistics,
};
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::poisson;
use crate::spectrum::{self, Potential, RightBoundary, Spectrum};

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-10;
const CG_ITERATIONS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target for the `H¹` fixed-point residual `‖U − Poisson(ρ[U])‖`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting potential; zero when absent. Must vanish at the left end.
    pub initial: Option<GridFunction>,
}

impl SolverOptions {
    pub fn new(tol: f64) -> Self {
        SolverOptions {
            tol,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SPSolution {
    pub epsilon: f64,
    pub potential: Potential,
    pub spectrum: Spectrum,
    pub occupation: OccupationSet,
    pub functional_value: f64,
    pub residual_h1: f64,
    pub iterations: usize,
    /// Functional values after each accepted step, starting with the initial guess.
    pub functional_history: Vec<f64>,
}

impl SPSolution {
    pub fn density(&self) -> GridFunction {
        // counts are consistent by construction
        charge_density(&self.spectrum, &self.occupation).expect("consistent occupation")
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FirstLevelSolution {
    pub epsilon: f64,
    pub potential: Potential,
    pub e1: f64,
    pub psi1: GridFunction,
    /// Rayleigh quotient of `psi1`; equals `e1` at a solution.
    pub multiplier: f64,
    /// `J̃(U) = ½∫|U′|² − E_1[U]`.
    pub functional_value: f64,
    /// Fixed-point residual for the potential-space solver, eigen-residual
    /// `‖Hφ − μφ‖_{L²}` for the sphere solver.
    pub residual: f64,
    pub iterations: usize,
    pub functional_history: Vec<f64>,
}

impl FirstLevelSolution {
    pub fn density(&self) -> GridFunction {
        self.psi1.map(|v| v * v)
    }
}

/// Largest number of levels a solver may request on `grid`.
pub(crate) fn level_cap(grid: &Grid) -> usize {
    (grid.n() / 10).min((grid.n() - 1) / 4)
}

/// Eigenpairs of `H[U]` with enough levels to resolve the occupation series,
/// starting the search at `start` levels and doubling.
pub(crate) fn resolve_levels(
    u: &Potential,
    eps: f64,
    statistics: Statistics,
    start: usize,
) -> Result<(Spectrum, OccupationSet)> {
    let cap = level_cap(u.grid());
    if cap < 2 {
        return Err(Error::NeedsMoreLevels {
            required: 2,
            available: cap,
        });
    }
    let mut k = start.clamp(2, cap);
    loop {
        let spec = spectrum::solve_spectrum(u, k)?;
        if let Some(occ) = truncated_occupation(spec.energies(), eps, statistics)? {
            return Ok((spec, occ));
        }
        if k == cap {
            return Err(Error::NeedsMoreLevels {
                required: 2 * k,
                available: cap,
            });
        }
        k = (2 * k).min(cap);
    }
}

fn scaled_grid(eps: f64, n: usize) -> Result<Grid> {
    check_epsilon(eps)?;
    Grid::new(1.0 / eps, n)
}

fn check_options(opts: &SolverOptions, grid: &Grid) -> Result<Vec<f64>> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if opts.max_iterations == 0 {
        return Err(Error::invalid("max_iterations must be positive"));
    }
    match &opts.initial {
        None => Ok(alloc::vec![0.0; grid.node_count()]),
        Some(f) => {
            if f.grid() != grid {
                return Err(Error::invalid("initial potential is on a different grid"));
            }
            if f.values()[0].abs() > 1e-12 {
                return Err(Error::invalid("initial potential must vanish at the left end"));
            }
            let mut v = f.values().to_vec();
            v[0] = 0.0;
            Ok(v)
        }
    }
}

/// One evaluation of a model at a potential.
struct Evaluation<S> {
    value: f64,
    rho: Vec<f64>,
    state: S,
}

trait DescentModel {
    type State;
    fn evaluate(&mut self, u: &Potential) -> Result<Evaluation<Self::State>>;
}

struct Descent<S> {
    u: Potential,
    eval: Evaluation<S>,
    residual: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn h1_norm(v: &[f64], h: f64) -> f64 {
    libm::sqrt(grid::l2_squared(v, h) + grid::semi_squared(v, h))
}

fn potential(grid: Grid, values: Vec<f64>) -> Potential {
    Potential::new(GridFunction::from_vec(grid, values), RightBoundary::NeumannZero)
}

/// `U − Poisson(ρ[U])`, the gradient in the `H¹` seminorm metric.
fn gradient<M: DescentModel>(model: &mut M, grid: Grid, u: &[f64]) -> Result<Vec<f64>> {
    let eval = model.evaluate(&potential(grid, u.to_vec()))?;
    let target = poisson::poisson_values(&eval.rho, grid.h())?;
    Ok(u.iter().zip(&target).map(|(a, b)| a - b).collect())
}

/// Approximate Newton direction: conjugate gradients on `H d = r` in the
/// seminorm inner product, with Hessian-vector products by central
/// differences of the gradient. Falls back to `r` on negative curvature.
fn newton_direction<M: DescentModel>(model: &mut M, grid: Grid, u: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let h = grid.h();
    let inner = |a: &[f64], b: &[f64]| grid::semi_inner(a, b, h);
    let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rr0 = inner(r, r);
    let eta = crate::math::sqrt(crate::math::sqrt(rr0)).min(0.1);
    let mut x = alloc::vec![0.0; r.len()];
    let mut res = r.to_vec();
    let mut p = res.clone();
    let mut rr = rr0;
    for k in 0..CG_ITERATIONS {
        let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tau = 1e-6 * scale / pmax;
        let shifted = |s: f64| -> Vec<f64> { u.iter().zip(&p).map(|(a, b)| a + s * b).collect() };
        let gp = gradient(model, grid, &shifted(tau))?;
        let gm = gradient(model, grid, &shifted(-tau))?;
        let hp: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * tau)).collect();
        let curvature = inner(&p, &hp);
        if curvature.is_nan() || curvature <= 0.0 {
            return Ok(if k == 0 { r.to_vec() } else { x });
        }
        let alpha = rr / curvature;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        res.iter_mut().zip(&hp).for_each(|(ri, hi)| *ri -= alpha * hi);
        let next = inner(&res, &res);
        if next <= eta * eta * rr0 {
            break;
        }
        let beta = next / rr;
        p.iter_mut().zip(&res).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = next;
    }
    Ok(x)
}

fn descend<M: DescentModel>(
    model: &mut M,
    grid: Grid,
    start: Vec<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<Descent<M::State>> {
    let h = grid.h();
    let mut u = potential(grid, start);
    let mut eval = model.evaluate(&u)?;
    let mut history = alloc::vec![eval.value];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iterations {
        let target = poisson::poisson_values(&eval.rho, h)?;
        let r: Vec<f64> = target.iter().zip(u.values()).map(|(a, b)| a - b).collect();
        residual = h1_norm(&r, h);
        if residual <= tol {
            return Ok(Descent {
                u,
                eval,
                residual,
                iterations: it,
                history,
            });
        }
        if it == max_iterations {
            break;
        }
        let slack = 1e-14 * (1.0 + eval.value.abs());
        let newton = newton_direction(model, grid, u.values(), &r).ok();
        let mut accepted = false;
        for d in newton.iter().chain(core::iter::once(&r)) {
            let slope = grid::semi_inner(&r, d, h);
            if slope.is_nan() || slope <= 0.0 {
                continue;
            }
            let mut theta = 1.0;
            while theta >= MIN_STEP {
                let trial: Vec<f64> = u.values().iter().zip(d).map(|(a, b)| a + theta * b).collect();
                let trial = potential(grid, trial);
                let next = model.evaluate(&trial)?;
                if next.value <= eval.value - ARMIJO * theta * slope + slack {
                    u = trial;
                    eval = next;
                    history.push(eval.value);
                    accepted = true;
                    break;
                }
                theta *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}

struct FullModel {
    eps: f64,
    statistics: Statistics,
    levels: usize,
}

impl DescentModel for FullModel {
    type State = (Spectrum, OccupationSet);

    fn evaluate(&mut self, u: &Potential) -> Result<Evaluation<Self::State>> {
        let (spec, occ) = resolve_levels(u, self.eps, self.statistics, self.levels)?;
        self.levels = spec.count();
        let value = dirichlet_energy(u.function()) + statistical_term(&occ, spec.energies());
        let rho = charge_density(&spec, &occ)?.into_values();
        Ok(Evaluation {
            value,
            rho,
            state: (spec, occ),
        })
    }
}

struct FirstModel;

impl DescentModel for FirstModel {
    type State = Spectrum;

    fn evaluate(&mut self, u: &Potential) -> Result<Evaluation<Spectrum>> {
        let spec = spectrum::solve_spectrum(u, 1)?;
        let value = dirichlet_energy(u.function()) - spec.energy(1);
        let rho = spec.state(1).values().iter().map(|v| v * v).collect();
        Ok(Evaluation {
            value,
            rho,
            state: spec,
        })
    }
}

fn solve_full(eps: f64, n: usize, opts: &SolverOptions, statistics: Statistics) -> Result<SPSolution> {
    let grid = scaled_grid(eps, n)?;
    let start = check_options(opts, &grid)?;
    let mut model = FullModel {
        eps,
        statistics,
        levels: 4,
    };
    let d = descend(&mut model, grid, start, opts.tol, opts.max_iterations)?;
    let (spectrum, occupation) = d.eval.state;
    Ok(SPSolution {
        epsilon: eps,
        potential: d.u,
        spectrum,
        occupation,
        functional_value: d.eval.value,
        residual_h1: d.residual,
        iterations: d.iterations,
        functional_history: d.history,
    })
}

/// Minimizer of the Boltzmann functional on `[0, 1/ε]` with `n` intervals.
pub fn solve_full_boltzmann(eps: f64, n: usize, tol: f64) -> Result<SPSolution> {
    solve_full_boltzmann_with(eps, n, &SolverOptions::new(tol))
}

pub fn solve_full_boltzmann_with(eps: f64, n: usize, opts: &SolverOptions) -> Result<SPSolution> {
    solve_full(eps, n, opts, Statistics::Boltzmann)
}

/// Minimizer of the Fermi–Dirac functional; `ε_F` is re-solved at every evaluation.
pub fn solve_full_fermi_dirac(eps: f64, n: usize, tol: f64) -> Result<SPSolution> {
    solve_full_fermi_dirac_with(eps, n, &SolverOptions::new(tol))
}

pub fn solve_full_fermi_dirac_with(eps: f64, n: usize, opts: &SolverOptions) -> Result<SPSolution> {
    solve_full(eps, n, opts, Statistics::FermiDirac)
}

/// Minimizer of `J̃(U) = ½∫|U′|² − E_1[U]` on `[0, 1/ε]`.
pub fn solve_first_level(eps: f64, n: usize, tol: f64) -> Result<FirstLevelSolution> {
    solve_first_level_with(eps, n, &SolverOptions::new(tol))
}

pub fn solve_first_level_with(eps: f64, n: usize, opts: &SolverOptions) -> Result<FirstLevelSolution> {
    let grid = scaled_grid(eps, n)?;
    let start = check_options(opts, &grid)?;
    let d = descend(&mut FirstModel, grid, start, opts.tol, opts.max_iterations)?;
    let spec = d.eval.state;
    let psi1 = spec.state(1).clone();
    let multiplier = spectrum::rayleigh_quotient(d.u.values(), psi1.values(), grid.h());
    Ok(FirstLevelSolution {
        epsilon: eps,
        e1: spec.energy(1),
        psi1,
        multiplier,
        functional_value: d.eval.value,
        residual: d.residual,
        iterations: d.iterations,
        functional_history: d.history,
        potential: d.u,
    })
}
