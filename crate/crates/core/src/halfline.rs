//! The half-line limit problem on a truncated interval `[0, Ξ]`.
//!
//! The fundamental mode `E_1^∞[U]` is represented by the lowest Dirichlet
//! eigenvalue on `[0, Ξ]`. That stand-in is only meaningful when the state is
//! confined well inside the interval, so every mode carries the mass of `ψ²`
//! beyond `0.9 Ξ` as a certificate.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::math;
use crate::rate::{fit_exponential_rate, RateFit};
use crate::scf::{minimize_sphere_functional_with, SphereOptions};
use crate::spectrum::{self, Potential};

/// Largest admissible tail mass of `ψ²` beyond `0.9 Ξ`.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;
/// Hard cap on the truncation reached by adaptive doubling.
pub const MAX_TRUNCATION: f64 = 640.0;

/// `E_1^∞[√ξ]`, Richardson-extrapolated from `Ξ = 60` and `h = 0.005, 0.0025,
/// 0.00125` (1.833393067661, 1.833393474245, 1.833393575894; the successive
/// differences shrink by 4.00).
pub const SQRT_POTENTIAL_ENERGY: f64 = 1.833393609777;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FundamentalMode {
    pub energy: f64,
    pub state: GridFunction,
    pub truncation: f64,
    /// `∫ ψ²` over `[0.9 Ξ, Ξ]`.
    pub tail_mass: f64,
}

impl FundamentalMode {
    /// Fails with [`Error::TruncationTooSmall`] unless the state is confined.
    pub fn certify(self) -> Result<Self> {
        if self.tail_mass < TAIL_MASS_LIMIT {
            Ok(self)
        } else {
            Err(Error::TruncationTooSmall {
                truncation: self.truncation,
                tail_mass: self.tail_mass,
                suggested: 2.0 * self.truncation,
            })
        }
    }
}

/// Lowest Dirichlet mode of `−d²/dξ² + U` on the grid, with its tail mass,
/// whether or not the state is confined.
pub fn fundamental_mode_report(u: &Potential, grid: &Grid) -> Result<FundamentalMode> {
    if u.grid() != grid {
        return Err(Error::invalid("potential is not sampled on the given grid"));
    }
    let spec = spectrum::solve_spectrum(u, 1)?;
    let state = spec.state(1).clone();
    let tail_mass = tail_mass(&state, 0.9 * grid.length());
    Ok(FundamentalMode {
        energy: spec.energy(1),
        state,
        truncation: grid.length(),
        tail_mass,
    })
}

/// Certified stand-in for `E_1^∞[U]`.
pub fn fundamental_mode(u: &Potential, grid: &Grid) -> Result<f64> {
    Ok(fundamental_mode_report(u, grid)?.certify()?.energy)
}

/// `∫_{from}^{Ξ} ψ²` by the trapezoid rule on the nodes at or beyond `from`.
pub fn tail_mass(psi: &GridFunction, from: f64) -> f64 {
    let g = psi.grid();
    let start = (libm::ceil(from / g.h() - 1e-9) as usize).min(g.n());
    let sq: Vec<f64> = psi.values()[start..].iter().map(|v| v * v).collect();
    grid::trapezoid(&sq, g.h())
}

/// `J_0(U) = ½∫|U′|² − E_1^∞[U]`.
///
/// Uses the uncertified mode, so that `U ≡ 0` yields `−π²/Ξ²`, the truncated
/// approximation of the infimum `0`.
pub fn evaluate_j0(u: &Potential, grid: &Grid) -> Result<f64> {
    let mode = fundamental_mode_report(u, grid)?;
    Ok(0.5 * grid::semi_squared(u.values(), grid.h()) - mode.energy)
}

/// Certified fundamental mode of `α√ξ` with fixed spacing `h`, starting from
/// truncation `xi` and doubling while the certificate fails.
pub fn sqrt_potential_mode(alpha: f64, h: f64, xi: f64) -> Result<FundamentalMode> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha must be positive"));
    }
    let mut xi = xi;
    loop {
        let grid = Grid::with_spacing(xi, h)?;
        let u = Potential::from_fn(grid, |x| alpha * math::sqrt(x));
        match fundamental_mode_report(&u, &grid)?.certify() {
            Ok(mode) => return Ok(mode),
            Err(Error::TruncationTooSmall { suggested, .. }) if suggested <= MAX_TRUNCATION => {
                xi = suggested;
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingParams {
    /// Grid spacing shared by every `α`.
    pub h: f64,
    /// Starting truncation for `α = 1`; scaled by `α^{−2/5}` for other `α`.
    pub base_truncation: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams {
            h: 0.005,
            base_truncation: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingEntry {
    pub alpha: f64,
    pub truncation: f64,
    pub energy: f64,
    pub ratio: f64,
    /// `α^{4/5}`.
    pub expected: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingReport {
    /// `E_1^∞[√ξ]`.
    pub reference: f64,
    pub reference_truncation: f64,
    pub entries: Vec<ScalingEntry>,
    pub max_deviation: f64,
}

/// Compares `E_1^∞[α√ξ] / E_1^∞[√ξ]` with `α^{4/5}`.
///
/// The grid spacing is the same for every `α` (rather than rescaling the grid
/// with `α`, which would make the check an identity of the discretization).
pub fn check_scaling_law(alphas: &[f64], params: &ScalingParams) -> Result<ScalingReport> {
    if alphas.is_empty() {
        return Err(Error::invalid("no alphas given"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::invalid(alloc::format!("alpha must be positive, got {a}")));
    }
    let base = sqrt_potential_mode(1.0, params.h, params.base_truncation)?;
    let mut entries = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mode = if alpha == 1.0 {
            base.clone()
        } else {
            let xi = params.base_truncation * math::powf(alpha, -0.4);
            sqrt_potential_mode(alpha, params.h, xi)?
        };
        let ratio = mode.energy / base.energy;
        let expected = math::powf(alpha, 0.8);
        entries.push(ScalingEntry {
            alpha,
            truncation: mode.truncation,
            energy: mode.energy,
            ratio,
            expected,
            deviation: (ratio - expected).abs(),
        });
    }
    let max_deviation = entries.iter().fold(0.0f64, |m, e| m.max(e.deviation));
    Ok(ScalingReport {
        reference: base.energy,
        reference_truncation: base.truncation,
        entries,
        max_deviation,
    })
}

/// One step of the truncation doubling in [`solve_limit_problem`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationStep {
    pub truncation: f64,
    pub e10: f64,
    pub u_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimitSolution {
    pub truncation: f64,
    pub potential: Potential,
    pub e10: f64,
    pub psi10: GridFunction,
    /// `U_0(Ξ)`, a lower proxy for `lim U_0`.
    pub u_limit_estimate: f64,
    pub j0_value: f64,
    /// Eigen-residual of the final sphere solve.
    pub residual: f64,
    /// Every truncation tried, in order; the last one is the returned solution.
    pub history: Vec<TruncationStep>,
}

fn check_limit_args(xi: f64, n: usize) -> Result<()> {
    if !(xi >= 10.0 && xi.is_finite()) {
        return Err(Error::invalid("truncation must be at least 10"));
    }
    if n < 1000 {
        return Err(Error::invalid("the limit problem needs at least 1000 intervals"));
    }
    if xi > MAX_TRUNCATION {
        return Err(Error::invalid("truncation exceeds the doubling cap"));
    }
    Ok(())
}

fn limit_from(sol: crate::scf::FirstLevelSolution, history: Vec<TruncationStep>) -> LimitSolution {
    let grid = *sol.potential.grid();
    LimitSolution {
        truncation: grid.length(),
        e10: sol.e1,
        u_limit_estimate: sol.potential.values()[grid.n()],
        j0_value: sol.functional_value,
        residual: sol.residual,
        psi10: sol.psi1,
        potential: sol.potential,
        history,
    }
}

/// Solves the limit system on `[0, Ξ]`, doubling `Ξ` at fixed spacing until
/// the energy changes by less than `1e−8` between consecutive truncations.
pub fn solve_limit_problem(xi_max: f64, n: usize, tol: f64) -> Result<LimitSolution> {
    check_limit_args(xi_max, n)?;
    let h = xi_max / n as f64;
    let mut xi = xi_max;
    let mut history = Vec::new();
    let mut opts = SphereOptions::new(tol);
    let mut previous: Option<f64> = None;
    loop {
        let n_here = libm::round(xi / h) as usize;
        let sol = minimize_sphere_functional_with(xi, n_here, &opts)?;
        let u_end = sol.potential.values()[n_here];
        history.push(TruncationStep {
            truncation: xi,
            e10: sol.e1,
            u_end,
        });
        if let Some(prev) = previous {
            if (sol.e1 - prev).abs() < 1e-8 {
                return Ok(limit_from(sol, history));
            }
        }
        if 2.0 * xi > MAX_TRUNCATION {
            let tail_mass = tail_mass(&sol.psi1, 0.9 * xi);
            return Err(Error::TruncationTooSmall {
                truncation: xi,
                tail_mass,
                suggested: 2.0 * xi,
            });
        }
        previous = Some(sol.e1);
        opts.initial = Some(sol.psi1);
        xi *= 2.0;
    }
}

/// The limit system at the single truncation `xi`, without doubling. The
/// ground state must pass the tail-mass certificate.
pub fn solve_limit_at_truncation(xi: f64, n: usize, tol: f64) -> Result<LimitSolution> {
    check_limit_args(xi, n)?;
    let sol = minimize_sphere_functional_with(xi, n, &SphereOptions::new(tol))?;
    let tail = tail_mass(&sol.psi1, 0.9 * xi);
    if tail >= TAIL_MASS_LIMIT {
        return Err(Error::TruncationTooSmall {
            truncation: xi,
            tail_mass: tail,
            suggested: 2.0 * xi,
        });
    }
    let step = TruncationStep {
        truncation: xi,
        e10: sol.e1,
        u_end: sol.potential.values()[n],
    };
    Ok(limit_from(sol, alloc::vec![step]))
}

/// Exponential fit `ψ_{1,0}(ξ) ≈ a·e^{−bξ}` over the classically forbidden
/// part of the domain. The returned fit has `rate_c = b` and uses `1/ξ` in
/// place of `ε` with model exponent 1.
///
/// The window keeps nodes where `U_0(ξ) − E_{1,0}` is at least half its final
/// value, `ψ` is above `1e−9·max ψ` and `ξ ≤ 0.75 Ξ`.
pub fn tail_decay_fit(sol: &LimitSolution) -> Result<RateFit> {
    let grid = sol.potential.grid();
    let u = sol.potential.values();
    let psi = sol.psi10.values();
    let barrier_end = sol.u_limit_estimate - sol.e10;
    if barrier_end <= 0.0 {
        return Err(Error::FitWindow { samples: 0 });
    }
    let peak = sol.psi10.max_abs();
    let samples: Vec<(f64, f64)> = grid
        .nodes()
        .enumerate()
        .skip(1)
        .filter(|&(i, x)| {
            u[i] - sol.e10 >= 0.5 * barrier_end && psi[i] >= 1e-9 * peak && x <= 0.75 * grid.length()
        })
        .map(|(i, x)| (1.0 / x, psi[i]))
        .collect();
    if samples.len() < 3 {
        return Err(Error::FitWindow {
            samples: samples.len(),
        });
    }
    fit_exponential_rate(&samples, 1)
}

/// `√(U_0(Ξ) − E_{1,0})`, the decay rate of the barrier bound.
pub fn barrier_rate(sol: &LimitSolution) -> f64 {
    math::sqrt((sol.u_limit_estimate - sol.e10).max(0.0))
}
