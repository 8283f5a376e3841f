//! Fermi–Dirac occupation `f(u) = log(1 + e^{−u})`, its tail integral and the
//! Fermi level fixed by the charge constraint `Σ_p f((E_p − ε_F)/ε²) = 1/ε³`.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;
use crate::spectrum::Spectrum;

const MAX_BRACKET_DOUBLINGS: usize = 200;

/// `f(u) = log(1 + e^{−u})`.
pub fn fermi_dirac(u: f64) -> f64 {
    math::softplus_neg(u)
}

/// `F(x) = ∫_x^∞ log(1 + e^{−u}) du`.
///
/// Adaptive Simpson on `[x, x + 40]` plus the analytic tail `e^{−(x+40)}` for
/// `x ≥ 0`; negative arguments use `F(x) = π²/6 + x²/2 − F(−x)`.
pub fn fd_tail_integral(x: f64) -> f64 {
    if x < 0.0 {
        return PI * PI / 6.0 + 0.5 * x * x - fd_tail_integral(-x);
    }
    let b = x + 40.0;
    let scale = math::exp(-x);
    let tail = math::exp(-b);
    simpson(fermi_dirac, x, b, 1e-16 * scale) + tail
}

fn simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: impl Fn(f64) -> f64 + Copy,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `Σ_p f((E_p − ε_F)/ε²)` over the given energies.
pub(crate) fn occupation_sum(energies: &[f64], eps: f64, fermi_level: f64) -> f64 {
    let e2 = eps * eps;
    energies.iter().map(|&e| fermi_dirac((e - fermi_level) / e2)).sum()
}

/// Fermi level for a single level `E₁` and target `S`:
/// `ε_F = E₁ + ε²·log(e^S − 1)`, written without overflow.
pub fn single_level_fermi(e1: f64, eps: f64, target: f64) -> f64 {
    e1 + eps * eps * (target + math::ln(-math::exp_m1(-target)))
}

/// Fermi level such that all levels of `spectrum` carry `1/ε³` in total.
pub fn solve_fermi_level(spectrum: &Spectrum, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    fermi_level_for(spectrum.energies(), eps, 1.0 / (eps * eps * eps))
}

/// Bisection for `Σ_p f((E_p − ε_F)/ε²) = target`.
pub fn fermi_level_for(energies: &[f64], eps: f64, target: f64) -> Result<f64> {
    if energies.is_empty() {
        return Err(Error::invalid("spectrum is empty"));
    }
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::invalid("occupation target must be positive"));
    }
    let g = |mu: f64| occupation_sum(energies, eps, mu) - target;
    // one level alone reaches the target here, so the full sum does too
    let hi = single_level_fermi(energies[0], eps, target);
    let mut lo = hi;
    let mut step = eps * eps;
    let mut grown = 0;
    while g(lo) >= 0.0 {
        lo = hi - step;
        step *= 2.0;
        grown += 1;
        if grown > MAX_BRACKET_DOUBLINGS || !lo.is_finite() {
            return Err(Error::InfeasibleConstraint);
        }
    }
    let mut hi = hi;
    if g(hi) < 0.0 {
        return Err(Error::InfeasibleConstraint);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (g(lo).abs(), g(hi).abs());
    Ok(if rl < rh { lo } else { hi })
}
