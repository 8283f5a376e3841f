use qwell_sp_core::grid::{distance, integrate, norm, Grid, GridFunction, NormKind};
use qwell_sp_core::scf::{
    self, evaluate_functional_first, evaluate_functional_full, evaluate_sphere_functional,
    minimize_sphere_functional, minimize_sphere_functional_with, SolverOptions, SphereOptions, Statistics,
};
use qwell_sp_core::spectrum::{solve_spectrum, Potential, RightBoundary};
use qwell_sp_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-10;

fn n_for(eps: f64) -> usize {
    (1.0 / (eps * 0.01)).round() as usize
}

/// Smooth perturbation vanishing at the left end.
fn random_bump(grid: Grid, seed: u64, size: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l = grid.length();
    GridFunction::from_fn(grid, |x| {
        size * coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (std::f64::consts::PI * (k as f64 + 0.5) * x / l).sin())
            .sum::<f64>()
    })
}

fn is_concave_increasing(u: &[f64]) -> bool {
    u[0] == 0.0
        && u.windows(2).all(|w| w[1] >= w[0] - 1e-12)
        && u.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-12)
}

#[test]
fn boltzmann_solution_structure() {
    let eps = 0.25;
    let sol = scf::solve_full_boltzmann(eps, n_for(eps), TOL).unwrap();
    assert!(sol.residual_h1 <= TOL);
    assert!(is_concave_increasing(sol.potential.values()));
    assert_eq!(sol.potential.right_bc(), RightBoundary::NeumannZero);
    let rho = sol.density();
    assert!((integrate(&rho) - 1.0).abs() < 1e-10);
    let w = sol.occupation.weights();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(w.windows(2).all(|p| p[1] <= p[0]));
    assert!(sol.functional_history.windows(2).all(|p| p[1] <= p[0] + 1e-14 * (1.0 + p[0].abs())));
    assert_eq!(*sol.functional_history.last().unwrap(), sol.functional_value);
    let again = evaluate_functional_full(&sol.potential, eps, sol.potential.grid(), Statistics::Boltzmann).unwrap();
    assert!((again - sol.functional_value).abs() < 1e-12);
}

#[test]
fn boltzmann_minimum_beats_perturbations() {
    let eps = 0.3;
    let sol = scf::solve_full_boltzmann(eps, n_for(eps), 1e-11).unwrap();
    let grid = *sol.potential.grid();
    for seed in 0..6 {
        let bump = random_bump(grid, seed, 1e-2);
        let v = sol.potential.function().combine(1.0, &bump, 1.0).unwrap();
        let v = Potential::new(v, RightBoundary::NeumannZero);
        let j = evaluate_functional_full(&v, eps, &grid, Statistics::Boltzmann).unwrap();
        assert!(j > sol.functional_value, "seed {seed}");
    }
}

#[test]
fn first_level_solution_structure() {
    let eps = 0.2;
    let sol = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
    assert!(sol.residual <= TOL);
    assert!(is_concave_increasing(sol.potential.values()));
    assert!((integrate(&sol.density()) - 1.0).abs() < 1e-10);
    assert!((sol.multiplier - sol.e1).abs() < 1e-10);
    assert!(sol.psi1.values().iter().all(|&v| v >= 0.0));
    let j = evaluate_functional_first(&sol.potential, sol.potential.grid()).unwrap();
    assert!((j - sol.functional_value).abs() < 1e-12);
    let grid = *sol.potential.grid();
    for seed in 10..14 {
        let v = sol.potential.function().combine(1.0, &random_bump(grid, seed, 1e-2), 1.0).unwrap();
        let v = Potential::new(v, RightBoundary::NeumannZero);
        assert!(evaluate_functional_first(&v, &grid).unwrap() > sol.functional_value);
    }
}

#[test]
fn first_level_is_independent_of_the_start() {
    let eps = 0.25;
    let n = n_for(eps);
    let reference = scf::solve_first_level(eps, n, 1e-11).unwrap();
    let grid = *reference.potential.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..3 {
        // random concave nondecreasing starts
        let a = rng.gen_range(0.1..5.0);
        let b = rng.gen_range(0.2..3.0);
        let start = GridFunction::from_fn(grid, |x| a * (1.0 - (-b * x).exp()));
        let opts = SolverOptions {
            initial: Some(start),
            ..SolverOptions::new(1e-11)
        };
        let sol = scf::solve_first_level_with(eps, n, &opts).unwrap();
        let d = distance(sol.potential.function(), reference.potential.function(), NormKind::H1).unwrap();
        assert!(d < 1e-9, "distance {d}");
    }
}

#[test]
fn potential_and_sphere_formulations_agree() {
    let eps = 0.25;
    let n = n_for(eps);
    let a = scf::solve_first_level(eps, n, 1e-11).unwrap();
    let b = minimize_sphere_functional(1.0 / eps, n, 1e-11).unwrap();
    assert_eq!(a.potential.grid(), b.potential.grid());
    let du = distance(a.potential.function(), b.potential.function(), NormKind::H1).unwrap();
    assert!(du <= 1e-6, "ΔU {du}");
    assert!((a.e1 - b.e1).abs() <= 1e-6);
    // A(φ*) = −J̃(Ũ) at the common optimum
    let phi_value = evaluate_sphere_functional(&b.psi1).unwrap();
    assert!((phi_value + a.functional_value).abs() < 1e-8);
    assert!((b.functional_value - a.functional_value).abs() < 1e-8);
    assert!(b.functional_history.windows(2).all(|p| p[1] <= p[0] + 1e-13));
}

#[test]
fn sphere_functional_is_convex_along_square_root_mixtures() {
    let grid = Grid::new(6.0, 600).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normalized = |f: GridFunction| {
        let nrm = norm(&f, NormKind::L2);
        f.map(|v| v / nrm)
    };
    for _ in 0..5 {
        let (p, q) = (rng.gen_range(1..4) as f64, rng.gen_range(0.5..3.0));
        let f0 = normalized(GridFunction::from_fn(grid, |x| (std::f64::consts::PI * p * x / 6.0).sin().abs()));
        let f1 = normalized(GridFunction::from_fn(grid, |x| x * (6.0 - x) * (-q * x).exp()));
        let (a0, a1) = (
            evaluate_sphere_functional(&f0).unwrap(),
            evaluate_sphere_functional(&f1).unwrap(),
        );
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mix = GridFunction::new(
                grid,
                f0.values()
                    .iter()
                    .zip(f1.values())
                    .map(|(a, b)| ((1.0 - t) * a * a + t * b * b).sqrt())
                    .collect(),
            )
            .unwrap();
            let am = evaluate_sphere_functional(&mix).unwrap();
            assert!(am <= (1.0 - t) * a0 + t * a1 + 1e-10, "t {t}");
        }
    }
}

#[test]
fn sphere_start_does_not_matter() {
    let (l, n) = (5.0, 500);
    let a = minimize_sphere_functional(l, n, 1e-11).unwrap();
    let grid = *a.potential.grid();
    let start = GridFunction::from_fn(grid, |x| x * x * (l - x));
    let b = minimize_sphere_functional_with(
        l,
        n,
        &SphereOptions {
            initial: Some(start),
            ..SphereOptions::new(1e-11)
        },
    )
    .unwrap();
    assert!((a.e1 - b.e1).abs() < 1e-9);
    assert!(distance(a.potential.function(), b.potential.function(), NormKind::H1).unwrap() < 1e-8);
}

#[test]
fn ordering_chain_holds() {
    for eps in [0.3, 0.25, 0.2] {
        let n = n_for(eps);
        let full = scf::solve_full_boltzmann(eps, n, TOL).unwrap();
        let first = scf::solve_first_level(eps, n, TOL).unwrap();
        let grid = *first.potential.grid();
        let jt_first = first.functional_value;
        let jt_full = evaluate_functional_first(&full.potential, &grid).unwrap();
        let j_full = full.functional_value;
        let j_first = evaluate_functional_full(&first.potential, eps, &grid, Statistics::Boltzmann).unwrap();
        let s = 1e-8;
        assert!(jt_first <= jt_full + s && jt_full <= j_full + s && j_full <= j_first + s, "eps {eps}");
    }
}

#[test]
fn fermi_dirac_constraint_is_met() {
    for eps in [0.35, 0.25] {
        let sol = scf::solve_full_fermi_dirac(eps, n_for(eps), TOL).unwrap();
        let mu = sol.occupation.fermi_level().unwrap();
        let e2 = eps * eps;
        let total: f64 = sol.spectrum.energies()[..sol.occupation.levels_used()]
            .iter()
            .map(|e| scf::fermi_dirac((e - mu) / e2))
            .sum();
        let target = 1.0 / (e2 * eps);
        assert!(((total - target) / target).abs() <= 1e-10);
        assert!((integrate(&sol.density()) - 1.0).abs() < 1e-10);
        assert!(is_concave_increasing(sol.potential.values()));
        assert!(sol.residual_h1 <= TOL);
    }
}

#[test]
fn solvers_are_deterministic() {
    let a = scf::solve_full_boltzmann(0.3, 333, TOL).unwrap();
    let b = scf::solve_full_boltzmann(0.3, 333, TOL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solver_errors() {
    assert!(matches!(scf::solve_first_level(1.0, 100, TOL), Err(Error::InvalidArgument(_))));
    assert!(matches!(scf::solve_full_boltzmann(0.0, 100, TOL), Err(Error::InvalidArgument(_))));
    assert!(matches!(scf::solve_first_level(0.3, 10, TOL), Err(Error::InvalidArgument(_))));
    assert!(matches!(scf::solve_first_level(0.3, 100, -1.0), Err(Error::InvalidArgument(_))));
    let opts = SolverOptions {
        max_iterations: 1,
        ..SolverOptions::new(1e-12)
    };
    assert!(matches!(
        scf::solve_full_boltzmann_with(0.3, 333, &opts),
        Err(Error::NonConvergence { .. })
    ));
    let wrong = GridFunction::zeros(Grid::new(2.0, 50).unwrap());
    let opts = SolverOptions {
        initial: Some(wrong),
        ..SolverOptions::new(TOL)
    };
    assert!(scf::solve_first_level_with(0.3, 333, &opts).is_err());
}

#[test]
fn excited_levels_are_thin_at_the_first_level_solution() {
    let eps = 0.3;
    let first = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
    let spec = solve_spectrum(&first.potential, 4).unwrap();
    let occ = scf::occupation_weights(&spec, eps, Statistics::Boltzmann).unwrap();
    assert!(occ.weights()[1] < 1e-10);
}
