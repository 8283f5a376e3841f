use qwell_sp_core::grid::{Grid, GridFunction};
use qwell_sp_core::halfline::solve_limit_problem;
use qwell_sp_core::lab::compare::{
    compare_first_limit_solutions, compare_full_first_solutions, resolved_difference, ScaledDistance,
};
use qwell_sp_core::lab::sweep::{assemble_report, limit_for, measure_epsilon};
use qwell_sp_core::lab::{
    compare_first_vs_limit, energy_ordering_check, fd_tail_ratio, run_epsilon_sweep, spectral_gap, SweepConfig,
};
use qwell_sp_core::poisson::solve_poisson_signed;
use qwell_sp_core::scf::{self, Statistics};
use qwell_sp_core::spectrum::{solve_spectrum, Potential};
use qwell_sp_core::Error;

const TOL: f64 = 1e-10;

fn n_for(eps: f64) -> usize {
    (1.0 / (eps * 0.01)).round() as usize
}

/// Excited-state source `Σ_{p≥2} w_p (ψ_p² − ψ₁²)` with Boltzmann weights.
fn excited_source(u: &Potential, eps: f64, levels: usize) -> Vec<f64> {
    let spec = solve_spectrum(u, levels).unwrap();
    let e1 = spec.energy(1);
    let raw: Vec<f64> = spec.energies().iter().map(|e| (-(e - e1) / (eps * eps)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let psi1 = spec.state(1).values();
    let mut s = vec![0.0; psi1.len()];
    for p in 1..levels {
        let psi = spec.state(p + 1).values();
        for i in 0..s.len() {
            s[i] += raw[p] / z * (psi[i] * psi[i] - psi1[i] * psi1[i]);
        }
    }
    s
}

/// Solves `U = Poisson(ψ₁[U]² + λ s)` by damped fixed-point iteration.
fn perturbed_first_level(start: &Potential, s: &[f64], lambda: f64) -> Vec<f64> {
    let grid = *start.grid();
    let mut u = start.values().to_vec();
    for _ in 0..5000 {
        let pot = Potential::new(GridFunction::new(grid, u.clone()).unwrap(), start.right_bc());
        let spec = solve_spectrum(&pot, 1).unwrap();
        let rho: Vec<f64> = spec
            .state(1)
            .values()
            .iter()
            .zip(s)
            .map(|(p, si)| p * p + lambda * si)
            .collect();
        let next = solve_poisson_signed(&GridFunction::new(grid, rho).unwrap(), &grid).unwrap();
        let change = next.values().iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        u.iter_mut().zip(next.values()).for_each(|(a, b)| *a = 0.5 * *a + 0.5 * b);
        // roundoff in the eigen and Poisson solves is a few 1e−14
        if change < 2e-13 {
            return u;
        }
    }
    panic!("fixed point did not converge");
}

#[test]
fn resolved_difference_matches_an_amplified_direct_solve() {
    let eps = 0.3;
    let first = scf::solve_first_level(eps, n_for(eps), 1e-12).unwrap();
    let (d, levels) = resolved_difference(&first).unwrap();
    let s = excited_source(&first.potential, eps, levels);
    let smax = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lambda = 1e-4 / smax;
    let plus = perturbed_first_level(&first.potential, &s, lambda);
    let minus = perturbed_first_level(&first.potential, &s, -lambda);
    let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * lambda)).collect();
    let err: Vec<f64> = fd.iter().zip(&d).map(|(a, b)| a - b).collect();
    let h = first.potential.grid().h();
    let rel = ScaledDistance::of(&err, h).h1() / ScaledDistance::of(&d, h).h1();
    assert!(rel < 1e-4, "relative mismatch {rel}");
}

#[test]
fn self_distances_vanish() {
    let eps = 0.3;
    let first = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
    let zero = ScaledDistance::of(&[0.0; 10], 0.1);
    assert_eq!(zero.h1(), 0.0);
    // the limit problem on the first-level domain compared with its own restriction
    let own = qwell_sp_core::scf::minimize_sphere_functional(1.0 / eps, n_for(eps), TOL).unwrap();
    let as_limit = qwell_sp_core::halfline::LimitSolution {
        truncation: own.potential.grid().length(),
        potential: own.potential.clone(),
        e10: own.e1,
        psi10: own.psi1.clone(),
        u_limit_estimate: *own.potential.values().last().unwrap(),
        j0_value: own.functional_value,
        residual: own.residual,
        history: Vec::new(),
    };
    let self_cmp = compare_first_limit_solutions(&own, &as_limit).unwrap();
    assert!(self_cmp.scaled.h1() < 1e-13);
    let close = compare_first_limit_solutions(&first, &as_limit).unwrap();
    assert!(close.scaled.h1() < 1e-6, "{close:?}");
}

#[test]
fn unscaled_norms_follow_the_change_of_variables() {
    let d = ScaledDistance { semi: 3.0, l2: 2.0 };
    for eps in [0.35f64, 0.2, 0.1] {
        let expect = (9.0 * eps.powi(-5) + 4.0 * eps.powi(-3)).sqrt();
        assert!((d.unscaled_h1(eps) - expect).abs() <= 1e-14 * expect);
    }
    // V(z) = ε^{−2}U(z/ε) with U(ξ) = sin ξ: direct quadrature on [0, 1]
    let eps = 0.25;
    let g = Grid::new(1.0 / eps, 40_000).unwrap();
    let u: Vec<f64> = g.nodes().map(f64::sin).collect();
    let scaled = ScaledDistance::of(&u, g.h());
    let z = Grid::new(1.0, 40_000).unwrap();
    let v: Vec<f64> = z.nodes().map(|x| (x / eps).sin() / (eps * eps)).collect();
    let direct = ScaledDistance::of(&v, z.h()).h1();
    assert!((scaled.unscaled_h1(eps) - direct).abs() < 1e-10 * direct);
}

#[test]
fn first_vs_limit_requires_a_long_enough_limit() {
    let eps = 0.2;
    let first = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
    let mut limit = solve_limit_problem(10.0, 1000, TOL).unwrap();
    assert!(compare_first_limit_solutions(&first, &limit).is_ok());
    limit.truncation = 4.0;
    assert!(matches!(
        compare_first_limit_solutions(&first, &limit),
        Err(Error::InvalidConfiguration(_))
    ));
}

#[test]
fn first_vs_limit_decreases_along_the_sweep() {
    let eps = [0.35, 0.3, 0.25, 0.2];
    let dist: Vec<f64> = eps
        .iter()
        .map(|&e| compare_first_vs_limit(e, n_for(e), TOL).unwrap().scaled.semi)
        .collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
    let samples: Vec<(f64, f64)> = eps.iter().cloned().zip(dist).collect();
    let fit = qwell_sp_core::fit_exponential_rate(&samples, 1).unwrap();
    assert!(fit.rate_c > 0.0 && fit.r_squared > 0.98, "{fit:?}");
}

#[test]
fn gap_is_positive_and_consistent() {
    for eps in [0.35, 0.25] {
        let gap = spectral_gap(eps, n_for(eps), TOL).unwrap();
        assert!(gap > 0.0);
        let first = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
        let spec = solve_spectrum(&first.potential, 5).unwrap();
        assert!((spec.energy(2) - spec.energy(1) - gap).abs() < 1e-8);
    }
}

#[test]
fn ordering_report_identity_and_chain() {
    for eps in [0.3, 0.25, 0.2] {
        let r = energy_ordering_check(eps, n_for(eps), TOL).unwrap();
        assert!(r.verdict, "{r:?}");
        assert!(r.identity_residual <= 1e-10);
        let e2 = eps * eps;
        assert!(r.full_at_first - r.first_at_first <= e2 * r.levels as f64 * (-r.gap / e2).exp() + 1e-15);
    }
}

#[test]
fn fd_tail_ratio_is_nonnegative_with_tight_constraint() {
    for eps in [0.35, 0.3] {
        let t = fd_tail_ratio(eps, n_for(eps), TOL).unwrap();
        assert!(t.ratio >= 0.0);
        assert!(t.constraint_residual <= 1e-10);
    }
}

#[test]
fn full_first_comparison_of_identical_inputs_is_zero_in_the_direct_part() {
    let eps = 0.3;
    let first = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
    let full = scf::solve_full_boltzmann_with(
        eps,
        n_for(eps),
        &scf::SolverOptions {
            initial: Some(first.potential.function().clone()),
            ..scf::SolverOptions::new(TOL)
        },
    )
    .unwrap();
    let cmp = compare_full_first_solutions(&full, &first).unwrap();
    assert!(cmp.direct.h1() <= 10.0 * TOL);
    assert!(cmp.resolved.h1() > 0.0);
    assert!((cmp.resolved_unscaled_h1 - cmp.resolved.unscaled_h1(eps)).abs() == 0.0);
}

fn small_config() -> SweepConfig {
    SweepConfig {
        epsilons: vec![0.35, 0.3, 0.25],
        fermi_dirac: true,
        ..SweepConfig::default()
    }
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let cfg = small_config();
    let a = run_epsilon_sweep(&cfg).unwrap();
    let b = run_epsilon_sweep(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.epsilons, cfg.epsilons);
    assert!(a.failures.is_empty());
    assert!(a.chain_ok.iter().all(|&c| c));
    assert!(a.gaps.iter().all(|&g| g > 0.0));
    assert_eq!(a.measured_gap, a.gaps.iter().cloned().fold(f64::INFINITY, f64::min));
    for (i, m) in a.measurements.iter().enumerate() {
        assert_eq!(a.err_first_vs_limit[i], m.first_limit.scaled.unscaled_h1(m.epsilon));
        assert_eq!(a.err_full_vs_first[i], m.full_first.resolved.unscaled_h1(m.epsilon));
        assert_eq!(m.curves.xi.len(), m.n + 1);
    }
    assert!(a.fd_tail_ratios.as_ref().unwrap().len() == 3);
    assert!(a.fit_first_limit.unwrap().rate_c > 0.0);

    // outcomes measured out of order are assembled in descending ε
    let limit = limit_for(&cfg.epsilons, cfg.h, cfg.tol, cfg.limit_truncation).unwrap();
    let outcomes = cfg
        .epsilons
        .iter()
        .rev()
        .map(|&e| (e, measure_epsilon(e, &cfg, &limit)))
        .collect();
    let c = assemble_report(&cfg, &limit, outcomes).unwrap();
    assert_eq!(a, c);
}

#[test]
fn sweep_records_partial_failures() {
    let cfg = small_config();
    let limit = limit_for(&cfg.epsilons, cfg.h, cfg.tol, cfg.limit_truncation).unwrap();
    let outcomes = vec![
        (0.35, measure_epsilon(0.35, &cfg, &limit)),
        (0.3, Err(Error::InvalidArgument("synthetic".into()).at_epsilon(0.3))),
    ];
    let r = assemble_report(&cfg, &limit, outcomes).unwrap();
    assert_eq!(r.epsilons, vec![0.35]);
    assert_eq!(r.failures.len(), 1);
    assert!(r.failures[0].error.contains("0.3"));
    assert!(r.fit_first_limit.is_none());
    let all_failed = vec![(0.3, Err(Error::InvalidArgument("synthetic".into())))];
    assert!(matches!(
        assemble_report(&cfg, &limit, all_failed),
        Err(Error::SweepFailure { attempted: 1 })
    ));
}

#[test]
fn sweep_config_is_validated() {
    let bad = [
        SweepConfig { epsilons: vec![], ..SweepConfig::default() },
        SweepConfig { epsilons: vec![0.2, 0.3], ..SweepConfig::default() },
        SweepConfig { epsilons: vec![1.5], ..SweepConfig::default() },
        SweepConfig { tol: 0.5, ..SweepConfig::default() },
        SweepConfig { h: 0.0, ..SweepConfig::default() },
    ];
    for cfg in bad {
        assert!(matches!(run_epsilon_sweep(&cfg), Err(Error::InvalidConfiguration(_))));
    }
    assert!(SweepConfig::default().validate().is_ok());
    assert_eq!(SweepConfig::default().intervals(0.25), 400);
}

#[test]
fn boltzmann_full_functional_exceeds_first_by_the_excited_term() {
    let eps = 0.35;
    let first = scf::solve_first_level(eps, n_for(eps), TOL).unwrap();
    let grid = *first.potential.grid();
    let j = scf::evaluate_functional_full(&first.potential, eps, &grid, Statistics::Boltzmann).unwrap();
    assert!(j >= first.functional_value);
}
