use qwell_sp_core::grid::{Grid, GridFunction};
use qwell_sp_core::halfline::{
    self, check_scaling_law, evaluate_j0, fundamental_mode, fundamental_mode_report, solve_limit_problem,
    tail_decay_fit, tail_mass, ScalingParams, SQRT_POTENTIAL_ENERGY,
};
use qwell_sp_core::scf::{minimize_sphere_functional_with, SphereOptions};
use qwell_sp_core::spectrum::Potential;
use qwell_sp_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// `ψ(X)` for `ψ″ = (ξ − E)ψ`, `ψ(0) = 0`, `ψ′(0) = 1`, by classical RK4.
fn airy_shoot(e: f64, x_end: f64) -> f64 {
    let steps = 20_000;
    let dx = x_end / steps as f64;
    let f = |x: f64, y: [f64; 2]| [y[1], (x - e) * y[0]];
    let mut y = [0.0, 1.0];
    for i in 0..steps {
        let x = i as f64 * dx;
        let k1 = f(x, y);
        let k2 = f(x + dx / 2.0, [y[0] + dx / 2.0 * k1[0], y[1] + dx / 2.0 * k1[1]]);
        let k3 = f(x + dx / 2.0, [y[0] + dx / 2.0 * k2[0], y[1] + dx / 2.0 * k2[1]]);
        let k4 = f(x + dx, [y[0] + dx * k3[0], y[1] + dx * k3[1]]);
        y[0] += dx / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += dx / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    y[0]
}

/// Lowest `E` with `ψ(X) = 0`: the shooting solution changes sign there.
fn airy_oracle() -> f64 {
    let (mut lo, mut hi) = (2.0, 2.6);
    let s_lo = airy_shoot(lo, 10.0).signum();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if airy_shoot(mid, 10.0).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn linear_potential_matches_airy_zero() {
    let oracle = airy_oracle();
    // first zero of Ai is −2.338107410459767
    assert!((oracle - 2.338107410459767).abs() < 1e-7);
    let grid = Grid::new(40.0, 8000).unwrap();
    let u = Potential::from_fn(grid, |x| x);
    let e = fundamental_mode(&u, &grid).unwrap();
    assert!((e - oracle).abs() < 1e-4);
    assert!((e - 2.33811).abs() < 1e-4);
}

#[test]
fn zero_potential_is_a_box_mode_without_certificate() {
    let grid = Grid::new(20.0, 4000).unwrap();
    let u = Potential::from_fn(grid, |_| 0.0);
    let report = fundamental_mode_report(&u, &grid).unwrap();
    let h = grid.h();
    let discrete = 4.0 / (h * h) * (PI * h / 40.0).sin().powi(2);
    assert!((report.energy - discrete).abs() < 1e-10);
    assert!((report.energy - PI * PI / 400.0).abs() < 1e-8);
    match fundamental_mode(&u, &grid) {
        Err(Error::TruncationTooSmall { suggested, .. }) => assert_eq!(suggested, 40.0),
        other => panic!("unexpected {other:?}"),
    }
    let j0 = evaluate_j0(&u, &grid).unwrap();
    assert!(j0 < 0.0 && j0.abs() <= PI * PI / 400.0 + 1e-8);
}

#[test]
fn sqrt_potential_reference_is_grid_converged() {
    let coarse = halfline::sqrt_potential_mode(1.0, 0.005, 60.0).unwrap();
    let fine = halfline::sqrt_potential_mode(1.0, 0.0025, 60.0).unwrap();
    assert!((coarse.energy - fine.energy).abs() < 1e-5);
    assert!((fine.energy - SQRT_POTENTIAL_ENERGY).abs() < 1e-6);
    assert!(fine.tail_mass < halfline::TAIL_MASS_LIMIT);
}

#[test]
fn scaling_law_holds() {
    let report = check_scaling_law(&[0.25, 0.5, 1.0, 2.0, 4.0], &ScalingParams::default()).unwrap();
    assert!(report.max_deviation < 1e-3, "{report:?}");
    let one = report.entries.iter().find(|e| e.alpha == 1.0).unwrap();
    assert_eq!(one.ratio, 1.0);
    let four = report.entries.iter().find(|e| e.alpha == 4.0).unwrap();
    assert!((four.ratio - 3.0314331330207964).abs() < 1e-3);
    assert!(check_scaling_law(&[], &ScalingParams::default()).is_err());
    assert!(check_scaling_law(&[-1.0], &ScalingParams::default()).is_err());
}

#[test]
fn j0_follows_the_rescaling_identity() {
    // U^δ(ξ) = δ² U(δξ) on [0, Ξ/δ] at a fixed spacing
    let h = 0.01;
    let base_len = 40.0;
    let u = |x: f64| (1.0 + x).ln();
    let grid = Grid::with_spacing(base_len, h).unwrap();
    let pot = Potential::from_fn(grid, u);
    let e1 = fundamental_mode(&pot, &grid).unwrap();
    let semi = 1.0 - 1.0 / (1.0 + base_len); // ∫ |U′|²
    for delta in [0.5, 0.25] {
        let g = Grid::with_spacing(base_len / delta, h).unwrap();
        let p = Potential::from_fn(g, |x| delta * delta * u(delta * x));
        let j0 = evaluate_j0(&p, &g).unwrap();
        let predicted = 0.5 * delta.powi(5) * semi - delta * delta * e1;
        assert!(((j0 - predicted) / predicted).abs() < 1e-4, "delta {delta}: {j0} vs {predicted}");
        assert!(j0 < 0.0);
    }
}

#[test]
fn fundamental_mode_is_monotone_and_concave() {
    let grid = Grid::new(30.0, 3000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random_pot = |rng: &mut ChaCha8Rng| {
        let a = rng.gen_range(0.5..3.0);
        let b = rng.gen_range(0.1..1.0);
        let c = rng.gen_range(0.0..0.5);
        Potential::from_fn(grid, move |x| a * (1.0 - (-b * x).exp()) + c * x.sqrt())
    };
    for _ in 0..8 {
        let u = random_pot(&mut rng);
        let w = random_pot(&mut rng);
        let eu = fundamental_mode_report(&u, &grid).unwrap().energy;
        let ew = fundamental_mode_report(&w, &grid).unwrap().energy;
        let max = GridFunction::new(
            grid,
            u.values().iter().zip(w.values()).map(|(a, b)| a.max(*b)).collect(),
        )
        .unwrap();
        let em = fundamental_mode_report(&Potential::free(max), &grid).unwrap().energy;
        assert!(eu <= em + 1e-10 && ew <= em + 1e-10);
        let mid = u.function().combine(0.5, w.function(), 0.5).unwrap();
        let emid = fundamental_mode_report(&Potential::free(mid), &grid).unwrap().energy;
        assert!(emid >= 0.5 * (eu + ew) - 1e-10);
        let umax = u.function().max_abs();
        assert!(eu <= umax + PI * PI / (30.0 * 30.0) + 1e-10);
    }
}

#[test]
fn j0_is_coercive() {
    let grid = Grid::with_spacing(30.0, 0.005).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let a = rng.gen_range(0.2..4.0);
        let b = rng.gen_range(0.05..2.0);
        let u = Potential::from_fn(grid, |x| a * (1.0 - (-b * x).exp()));
        let s = u
            .values()
            .windows(2)
            .map(|w| (w[1] - w[0]).powi(2))
            .sum::<f64>()
            / grid.h();
        let s = s.sqrt();
        let j0 = evaluate_j0(&u, &grid).unwrap();
        // U ≤ ‖U′‖√ξ, so E_1[U] ≤ E_1[‖U′‖√ξ] on the same grid
        let bound_pot = Potential::from_fn(grid, |x| s * x.sqrt());
        let e_bound = fundamental_mode_report(&bound_pot, &grid).unwrap().energy;
        assert!(j0 >= 0.5 * s * s - e_bound - 1e-10);
        assert!(j0 >= 0.5 * s * s - SQRT_POTENTIAL_ENERGY * s.powf(0.8) - 1e-3 * (1.0 + s));
    }
}

fn limit() -> &'static halfline::LimitSolution {
    static CELL: OnceLock<halfline::LimitSolution> = OnceLock::new();
    CELL.get_or_init(|| solve_limit_problem(40.0, 4000, 1e-10).unwrap())
}

#[test]
fn limit_solution_structure() {
    let sol = limit();
    let u = sol.potential.values();
    assert_eq!(u[0], 0.0);
    assert!(u.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(u.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-12));
    let psi = sol.psi10.values();
    assert!(psi.iter().all(|&v| v >= 0.0));
    let peak = psi.iter().cloned().enumerate().fold((0, 0.0), |m, (i, v)| if v > m.1 { (i, v) } else { m }).0;
    assert!(psi[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-14));
    assert!(psi[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-14));
    let h = sol.potential.grid().h();
    let l2: f64 = psi.iter().map(|v| v * v).sum::<f64>() * h;
    assert!((l2 - 1.0).abs() < 1e-10);
    assert!(sol.e10 < sol.u_limit_estimate);
    assert!(sol.j0_value < 0.0);
    // Poisson block: −U″ = ψ² at interior nodes
    let n = u.len() - 1;
    let max_res = (1..n)
        .map(|i| ((2.0 * u[i] - u[i - 1] - u[i + 1]) / (h * h) - psi[i] * psi[i]).abs())
        .fold(0.0, f64::max);
    assert!(max_res < 1e-8, "poisson residual {max_res}");
    assert!(sol.residual <= 1e-10);
    // converged doubling from the requested truncation
    assert!(sol.history.len() >= 2);
    let last = &sol.history[sol.history.len() - 2..];
    assert!((last[1].e10 - last[0].e10).abs() < 1e-8);
    assert_eq!(sol.history[0].truncation, 40.0);
}

#[test]
fn limit_energy_is_stable_under_domain_and_grid_doubling() {
    let sol = limit();
    let doubled = solve_limit_problem(80.0, 8000, 1e-10).unwrap();
    assert!((doubled.e10 - sol.e10).abs() < 1e-6);
}

#[test]
fn limit_solution_is_unique_in_practice() {
    let sol = limit();
    let grid = *sol.potential.grid();
    let start = GridFunction::from_fn(grid, |x| x * (-0.1 * x).exp());
    let other = minimize_sphere_functional_with(
        grid.length(),
        grid.n(),
        &SphereOptions {
            initial: Some(start),
            ..SphereOptions::new(1e-10)
        },
    )
    .unwrap();
    assert!((other.e1 - sol.e10).abs() < 1e-6);
    let du = other
        .potential
        .values()
        .iter()
        .zip(sol.potential.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(du < 1e-6);
}

#[test]
fn tail_decays_at_the_barrier_rate() {
    let sol = limit();
    let fit = tail_decay_fit(sol).unwrap();
    let barrier = halfline::barrier_rate(sol);
    assert!(fit.rate_c > 0.0);
    assert!(fit.r_squared > 0.99);
    assert!(((fit.rate_c - barrier) / barrier).abs() < 0.25);
    let (m, dm) = (10.0, 5.0);
    let before = tail_mass(&sol.psi10, m);
    let after = tail_mass(&sol.psi10, m + dm);
    let ratio = after / before / (-2.0 * fit.rate_c * dm).exp();
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn limit_problem_rejects_bad_input() {
    assert!(matches!(solve_limit_problem(5.0, 4000, 1e-10), Err(Error::InvalidArgument(_))));
    assert!(matches!(solve_limit_problem(40.0, 500, 1e-10), Err(Error::InvalidArgument(_))));
    assert!(matches!(solve_limit_problem(1000.0, 100000, 1e-10), Err(Error::InvalidArgument(_))));
}

#[test]
fn fixed_truncation_solve_matches_the_doubling_solve() {
    let fixed = halfline::solve_limit_at_truncation(80.0, 8000, 1e-10).unwrap();
    assert_eq!(fixed.history.len(), 1);
    assert!((fixed.e10 - limit().e10).abs() < 1e-8);
    assert!(matches!(
        halfline::solve_limit_at_truncation(10.0, 1000, 1e-10),
        Err(Error::TruncationTooSmall { suggested, .. }) if suggested == 20.0
    ));
}
