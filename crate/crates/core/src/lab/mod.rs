//! ε-sweeps comparing the full, first-level and half-line limit problems.

pub mod checks;
pub mod compare;
pub mod sweep;

pub use checks::{energy_ordering_check, fd_tail_ratio, spectral_gap, FdTail, OrderingReport};
pub use compare::{compare_first_vs_limit, compare_full_vs_first, FirstLimitComparison, FullFirstComparison, ScaledDistance};
pub use sweep::{
    assemble_report, limit_for, measure_epsilon, run_epsilon_sweep, ConvergenceReport, EpsilonMeasurement,
    SweepConfig,
};
