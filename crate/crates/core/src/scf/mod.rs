//! Self-consistent solvers on the scaled interval `[0, 1/ε]`.
//!
//! The full problems occupy every bound level (Boltzmann or Fermi–Dirac
//! statistics); the first-level problem keeps only the ground state and is
//! solved both as a minimization over potentials and over normalized states.

pub mod fermi;
pub mod functional;
pub mod occupation;
mod solver;
mod sphere;

pub use fermi::{fd_tail_integral, fermi_dirac, fermi_level_for, single_level_fermi, solve_fermi_level};
pub use functional::{
    dirichlet_energy, evaluate_functional_first, evaluate_functional_full, evaluate_sphere_functional,
};
pub use occupation::{charge_density, occupation_weights, OccupationSet, Statistics, LEVEL_CUTOFF};
pub use solver::{
    solve_first_level, solve_first_level_with, solve_full_boltzmann, solve_full_boltzmann_with,
    solve_full_fermi_dirac, solve_full_fermi_dirac_with, FirstLevelSolution, SPSolution,
    SolverOptions, DEFAULT_MAX_ITERATIONS,
};
pub use sphere::{minimize_sphere_functional, minimize_sphere_functional_with, SphereOptions};

pub(crate) use solver::{level_cap, resolve_levels};
