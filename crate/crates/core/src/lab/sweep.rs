//! ε-sweeps: per-ε measurements and the assembled convergence report.
//!
//! Measurements for different ε are independent. [`run_epsilon_sweep`] runs
//! them in order; callers with threads can run [`measure_epsilon`] themselves
//! and hand the outcomes to [`assemble_report`], which sorts them.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::checks::{self, FdTail, OrderingReport};
use super::compare::{self, FirstLimitComparison, FullFirstComparison};
use crate::error::{Error, Result};
use crate::halfline::{self, LimitSolution};
use crate::math;
use crate::rate::{fit_exponential_rate, RateFit};
use crate::scf::{self, SolverOptions};

pub const DEFAULT_EPSILONS: [f64; 5] = [0.35, 0.30, 0.25, 0.20, 0.15];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    /// Strictly descending, each in `(0, 1)`.
    pub epsilons: Vec<f64>,
    /// Grid spacing in `ξ`, shared by every ε and by the limit problem.
    pub h: f64,
    pub tol: f64,
    /// Smallest truncation of the limit problem; it is raised to `2/ε_min`.
    pub limit_truncation: f64,
    pub fermi_dirac: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilons: DEFAULT_EPSILONS.to_vec(),
            h: 0.01,
            tol: 1e-10,
            limit_truncation: 40.0,
            fermi_dirac: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidConfiguration("no epsilon values".to_string()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidConfiguration(alloc::format!(
                "epsilon must lie in (0,1), got {e}"
            )));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfiguration(
                "epsilon values must be strictly descending".to_string(),
            ));
        }
        if !(self.h > 0.0 && self.h <= 0.1) {
            return Err(Error::InvalidConfiguration("spacing must lie in (0, 0.1]".to_string()));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::InvalidConfiguration("tolerance must lie in (0, 1e-2]".to_string()));
        }
        if !(self.limit_truncation >= 10.0 && self.limit_truncation <= halfline::MAX_TRUNCATION) {
            return Err(Error::InvalidConfiguration(
                "limit truncation must lie in [10, 640]".to_string(),
            ));
        }
        Ok(())
    }

    /// Number of intervals on `[0, 1/ε]` at spacing `h`.
    pub fn intervals(&self, eps: f64) -> usize {
        intervals_for(eps, self.h)
    }
}

fn intervals_for(eps: f64, h: f64) -> usize {
    (libm::round(1.0 / (eps * h)) as usize).max(crate::grid::MIN_INTERVALS)
}

/// Limit solution at spacing `h` on a truncation covering every `1/ε` twice
/// and at least `xi_min`.
pub fn limit_for(epsilons: &[f64], h: f64, tol: f64, xi_min: f64) -> Result<LimitSolution> {
    let eps_min = epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let want = xi_min.max(2.0 / eps_min);
    let n = (libm::ceil(want / h - 1e-9) as usize).max(1000);
    halfline::solve_limit_problem(n as f64 * h, n, tol)
}

/// `U` on the shared grid, for plotting.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Curves {
    pub xi: Vec<f64>,
    pub full: Vec<f64>,
    pub first: Vec<f64>,
    pub limit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpsilonMeasurement {
    pub epsilon: f64,
    pub n: usize,
    pub full_first: FullFirstComparison,
    pub first_limit: FirstLimitComparison,
    pub gap: f64,
    pub ordering: OrderingReport,
    pub fd_tail: Option<FdTail>,
    /// Error level below which the first-vs-limit distance is not resolved:
    /// ten times the summed solver residuals.
    pub first_limit_floor: f64,
    pub first_iterations: usize,
    pub full_iterations: usize,
    pub curves: Curves,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpsilonFailure {
    pub epsilon: f64,
    pub error: String,
}

/// Every measurement at one ε, against a precomputed limit solution.
pub fn measure_epsilon(eps: f64, config: &SweepConfig, limit: &LimitSolution) -> Result<EpsilonMeasurement> {
    measure(eps, config, limit).map_err(|e| e.at_epsilon(eps))
}

fn measure(eps: f64, config: &SweepConfig, limit: &LimitSolution) -> Result<EpsilonMeasurement> {
    let n = config.intervals(eps);
    let opts = SolverOptions::new(config.tol);
    let first = scf::solve_first_level_with(eps, n, &opts)?;
    let full = scf::solve_full_boltzmann_with(eps, n, &opts)?;
    let full_first = compare::compare_full_first_solutions(&full, &first)?;
    let first_limit = compare::compare_first_limit_solutions(&first, limit)?;
    let gap = checks::gap_of(&first)?;
    let ordering = checks::ordering_from(&full, &first)?;
    let fd_tail = if config.fermi_dirac {
        let fd = scf::solve_full_fermi_dirac_with(eps, n, &opts)?;
        Some(checks::fd_tail_from(&fd)?)
    } else {
        None
    };
    let grid = *first.potential.grid();
    let curves = Curves {
        xi: grid.nodes().collect(),
        full: full.potential.values().to_vec(),
        first: first.potential.values().to_vec(),
        limit: compare::limit_on_grid(&first, limit)?.into_values(),
    };
    Ok(EpsilonMeasurement {
        epsilon: eps,
        n,
        full_first,
        first_limit,
        gap,
        ordering,
        fd_tail,
        first_limit_floor: 10.0 * (first.residual + limit.residual),
        first_iterations: first.iterations,
        full_iterations: full.iterations,
        curves,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimitSummary {
    pub truncation: f64,
    pub e10: f64,
    pub u_limit_estimate: f64,
    pub j0_value: f64,
    pub residual: f64,
}

/// Per-ε series are aligned with `epsilons`, which lists the converged ε in
/// descending order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub config: SweepConfig,
    pub epsilons: Vec<f64>,
    /// `‖V_ε − Ṽ_ε‖_{H¹(0,1)}` from the resolved difference.
    pub err_full_vs_first: Vec<f64>,
    /// Resolved `‖U_ε − Ũ_ε‖_{H¹(0,M_ε)}`, the fitted quantity.
    pub err_full_vs_first_scaled: Vec<f64>,
    /// Scaled `H¹` norm of the direct subtraction of the two solutions.
    pub err_full_vs_first_direct: Vec<f64>,
    /// `‖Ṽ_ε − ε^{−2}U_0(·/ε)‖_{H¹(0,1)}`.
    pub err_first_vs_limit: Vec<f64>,
    /// `‖Ũ_ε − U_0‖` in the `H¹` seminorm on `[0, M_ε]`, the fitted quantity.
    pub err_first_vs_limit_scaled: Vec<f64>,
    pub floored_first_limit: Vec<bool>,
    pub gaps: Vec<f64>,
    /// Smallest gap over the sweep.
    pub measured_gap: f64,
    pub chain_ok: Vec<bool>,
    /// `|J(Ũ) − J̃(Ũ) − ε² log(1 + Σ e^{−(E_p−E_1)/ε²})|`.
    pub chain_identity_residuals: Vec<f64>,
    /// `J(Ũ) − J̃(Ũ) ≤ ε² P e^{−G/ε²}` with the measured `G`.
    pub gap_bound_ok: Vec<bool>,
    pub fit_full_first: Option<RateFit>,
    pub fit_first_limit: Option<RateFit>,
    pub fd_tail_ratios: Option<Vec<f64>>,
    pub fd_constraint_residuals: Option<Vec<f64>>,
    pub fit_fd_tail: Option<RateFit>,
    pub full_first_decreasing: bool,
    pub first_limit_decreasing: bool,
    pub fd_tail_decreasing: Option<bool>,
    pub limit: LimitSummary,
    pub measurements: Vec<EpsilonMeasurement>,
    pub failures: Vec<EpsilonFailure>,
}

pub fn run_epsilon_sweep(config: &SweepConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let limit = limit_for(&config.epsilons, config.h, config.tol, config.limit_truncation)?;
    let outcomes = config
        .epsilons
        .iter()
        .map(|&eps| (eps, measure_epsilon(eps, config, &limit)))
        .collect();
    assemble_report(config, &limit, outcomes)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fit_points(eps: &[f64], err: &[f64], keep: impl Fn(usize) -> bool, k: u32) -> Option<RateFit> {
    let samples: Vec<(f64, f64)> = eps
        .iter()
        .zip(err)
        .enumerate()
        .filter(|&(i, (_, e))| keep(i) && *e > 0.0 && e.is_finite())
        .map(|(_, (&x, &e))| (x, e))
        .collect();
    fit_exponential_rate(&samples, k).ok()
}

/// Sorts outcomes into descending ε, fits the rates and collects failures.
pub fn assemble_report(
    config: &SweepConfig,
    limit: &LimitSolution,
    mut outcomes: Vec<(f64, Result<EpsilonMeasurement>)>,
) -> Result<ConvergenceReport> {
    outcomes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let attempted = outcomes.len();
    let mut measurements = Vec::new();
    let mut failures = Vec::new();
    for (eps, outcome) in outcomes {
        match outcome {
            Ok(m) => measurements.push(m),
            Err(e) => failures.push(EpsilonFailure {
                epsilon: eps,
                error: e.to_string(),
            }),
        }
    }
    if measurements.is_empty() {
        return Err(Error::SweepFailure { attempted });
    }
    let epsilons: Vec<f64> = measurements.iter().map(|m| m.epsilon).collect();
    let err_full_vs_first_scaled: Vec<f64> = measurements.iter().map(|m| m.full_first.resolved.h1()).collect();
    let err_first_vs_limit_scaled: Vec<f64> = measurements.iter().map(|m| m.first_limit.scaled.semi).collect();
    let floored_first_limit: Vec<bool> = measurements
        .iter()
        .map(|m| m.first_limit.scaled.semi < m.first_limit_floor)
        .collect();
    let gaps: Vec<f64> = measurements.iter().map(|m| m.gap).collect();
    let measured_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap_bound_ok = measurements
        .iter()
        .map(|m| {
            let e2 = m.epsilon * m.epsilon;
            let bound = e2 * m.ordering.levels as f64 * math::exp(-measured_gap / e2);
            m.ordering.full_at_first - m.ordering.first_at_first <= bound + checks::CHAIN_SLACK
        })
        .collect();
    let fd: Option<Vec<FdTail>> = measurements.iter().map(|m| m.fd_tail).collect();
    let fd_tail_ratios = fd.as_ref().map(|v| v.iter().map(|t| t.ratio).collect::<Vec<_>>());
    let fit_fd_tail = fd_tail_ratios
        .as_ref()
        .and_then(|r| fit_points(&epsilons, r, |_| true, 2));
    let report = ConvergenceReport {
        config: config.clone(),
        err_full_vs_first: measurements.iter().map(|m| m.full_first.resolved_unscaled_h1).collect(),
        err_full_vs_first_direct: measurements.iter().map(|m| m.full_first.direct.h1()).collect(),
        err_first_vs_limit: measurements.iter().map(|m| m.first_limit.unscaled_h1).collect(),
        fit_full_first: fit_points(&epsilons, &err_full_vs_first_scaled, |_| true, 2),
        fit_first_limit: fit_points(&epsilons, &err_first_vs_limit_scaled, |i| !floored_first_limit[i], 1),
        full_first_decreasing: strictly_decreasing(&err_full_vs_first_scaled),
        first_limit_decreasing: strictly_decreasing(&err_first_vs_limit_scaled),
        chain_ok: measurements.iter().map(|m| m.ordering.verdict).collect(),
        chain_identity_residuals: measurements.iter().map(|m| m.ordering.identity_residual).collect(),
        gap_bound_ok,
        fd_tail_decreasing: fd_tail_ratios.as_deref().map(strictly_decreasing),
        fd_constraint_residuals: fd.map(|v| v.iter().map(|t| t.constraint_residual).collect()),
        fd_tail_ratios,
        fit_fd_tail,
        limit: LimitSummary {
            truncation: limit.truncation,
            e10: limit.e10,
            u_limit_estimate: limit.u_limit_estimate,
            j0_value: limit.j0_value,
            residual: limit.residual,
        },
        epsilons,
        err_full_vs_first_scaled,
        err_first_vs_limit_scaled,
        floored_first_limit,
        gaps,
        measured_gap,
        measurements,
        failures,
    };
    Ok(report)
}
