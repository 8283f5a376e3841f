//! The Dirichlet Schrödinger operator `−d²/dx² + V` on a uniform grid and its
//! lowest eigenpairs.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from one
//! shifted inverse iteration per level. Wavefunctions vanish at both ends, so
//! only the `n − 1` interior nodes enter the matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::math;
use crate::tridiag::TridiagonalSystem;

const MAX_INVERSE_ITERATIONS: usize = 50;

/// Boundary tag for the right end of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RightBoundary {
    NeumannZero,
    DirichletZero,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Potential {
    f: GridFunction,
    left_bc: f64,
    right_bc: RightBoundary,
    nonneg: bool,
}

impl Potential {
    /// Wraps `f`; the nonnegativity flag is computed from the samples.
    pub fn new(f: GridFunction, right_bc: RightBoundary) -> Self {
        let nonneg = f.values().iter().all(|&v| v >= -1e-12);
        let left_bc = f.values()[0];
        Potential {
            f,
            left_bc,
            right_bc,
            nonneg,
        }
    }

    pub fn free(f: GridFunction) -> Self {
        Potential::new(f, RightBoundary::Free)
    }

    pub fn zero(grid: Grid) -> Self {
        Potential::new(GridFunction::zeros(grid), RightBoundary::NeumannZero)
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64) -> f64) -> Self {
        Potential::free(GridFunction::from_fn(grid, f))
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }

    pub fn into_function(self) -> GridFunction {
        self.f
    }

    pub fn values(&self) -> &[f64] {
        self.f.values()
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn left_bc(&self) -> f64 {
        self.left_bc
    }

    pub fn right_bc(&self) -> RightBoundary {
        self.right_bc
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }
}

/// Lowest eigenpairs of a Dirichlet Hamiltonian, ascending.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spectrum {
    grid: Grid,
    energies: Vec<f64>,
    states: Vec<GridFunction>,
}

impl Spectrum {
    pub fn count(&self) -> usize {
        self.energies.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[GridFunction] {
        &self.states
    }

    /// Energy of level `p`, counted from 1.
    pub fn energy(&self, p: usize) -> f64 {
        self.energies[p - 1]
    }

    /// State of level `p`, counted from 1.
    pub fn state(&self, p: usize) -> &GridFunction {
        &self.states[p - 1]
    }

    /// `E_2 − E_1`, or `None` for a single level.
    pub fn gap(&self) -> Option<f64> {
        (self.count() >= 2).then(|| self.energies[1] - self.energies[0])
    }
}

pub fn assemble_hamiltonian(v: &Potential, grid: &Grid) -> Result<TridiagonalSystem> {
    if v.grid() != grid {
        return Err(Error::invalid("potential is not sampled on the given grid"));
    }
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let n = grid.n();
    let diag = v.values()[1..n].iter().map(|&x| 2.0 * inv_h2 + x).collect();
    TridiagonalSystem::new(diag, vec![-inv_h2; n - 2])
}

/// The `k` smallest eigenvalues of `h` by Sturm bisection, ascending.
pub fn lowest_eigenvalues(h: &TridiagonalSystem, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > h.size() {
        return Err(Error::invalid("eigenvalue count out of range"));
    }
    let (glo, ghi) = h.gershgorin_bounds();
    let mut out = Vec::with_capacity(k);
    let mut lo_start = glo - 1e-12 * (1.0 + glo.abs());
    for j in 0..k {
        let (mut lo, mut hi) = (lo_start, ghi + 1e-12 * (1.0 + ghi.abs()));
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if h.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let e = 0.5 * (lo + hi);
        out.push(e);
        lo_start = lo;
    }
    Ok(out)
}

/// The `k` lowest eigenpairs of `h`, embedded on `grid` with zero end values,
/// trapezoid-normalized and signed so that the first interior sample is positive.
pub fn lowest_eigenpairs(h: &TridiagonalSystem, k: usize, grid: &Grid) -> Result<Spectrum> {
    let m = h.size();
    if m + 2 != grid.node_count() {
        return Err(Error::invalid("Hamiltonian size does not match the grid"));
    }
    if k == 0 || k > m / 4 {
        return Err(Error::invalid(alloc::format!(
            "requested {k} levels, at most {} allowed",
            m / 4
        )));
    }
    let energies = lowest_eigenvalues(h, k)?;
    let hstep = grid.h();
    let hnorm = h
        .diag()
        .iter()
        .fold(0.0f64, |a, d| a.max(d.abs()))
        + 2.0 * h.off().iter().fold(0.0f64, |a, o| a.max(o.abs()));
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &e) in energies.iter().enumerate() {
        let x = inverse_iteration(h, e, j, &vectors, hnorm)?;
        vectors.push(x);
    }
    let scale = 1.0 / math::sqrt(hstep);
    let states = vectors
        .into_iter()
        .map(|x| {
            let mut values = Vec::with_capacity(m + 2);
            values.push(0.0);
            values.extend(x.iter().map(|v| v * scale));
            values.push(0.0);
            GridFunction::from_vec(*grid, values)
        })
        .collect();
    Ok(Spectrum {
        grid: *grid,
        energies,
        states,
    })
}

/// Assemble `H[V]` and compute its `k` lowest eigenpairs.
///
/// The energies are then replaced by the Rayleigh quotients
/// `Σ (Δψ)²/h + Σ h V ψ²`, evaluated from `V` without forming `2/h² + V`.
/// Forming the matrix rounds every diagonal entry at the scale `1/h²`, which
/// caps the bisection energies at an absolute accuracy of about `ε_mach/h²`;
/// the quotient of the (very accurate) eigenvector removes that floor.
pub fn solve_spectrum(v: &Potential, k: usize) -> Result<Spectrum> {
    let h = assemble_hamiltonian(v, v.grid())?;
    let mut spec = lowest_eigenpairs(&h, k, v.grid())?;
    for (e, psi) in spec.energies.iter_mut().zip(&spec.states) {
        *e = rayleigh_quotient(v.values(), psi.values(), v.grid().h());
    }
    Ok(spec)
}

/// `∫ |ψ′|² + ∫ V ψ²` for a state vanishing at both ends, divided by `∫ ψ²`.
pub(crate) fn rayleigh_quotient(v: &[f64], psi: &[f64], h: f64) -> f64 {
    let kinetic = grid::semi_squared(psi, h);
    let potential: f64 = v.iter().zip(psi).map(|(a, b)| a * b * b).sum::<f64>() * h;
    (kinetic + potential) / grid::l2_squared(psi, h)
}

struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = math::sqrt(dot(x, x));
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    nrm
}

/// Euclidean-normalized eigenvector of `h` for eigenvalue `e`, orthogonal to
/// the earlier `previous` vectors.
fn inverse_iteration(
    h: &TridiagonalSystem,
    e: f64,
    level: usize,
    previous: &[Vec<f64>],
    hnorm: f64,
) -> Result<Vec<f64>> {
    let m = h.size();
    let shift = e + 1e-10 * (1.0 + e.abs());
    let lu = h.factor_shifted(shift);
    let mut rng = XorShift(0x9E37_79B9_7F4A_7C15 ^ (level as u64 + 1).wrapping_mul(0x2545_F491_4F6C_DD1D));
    let mut x: Vec<f64> = (0..m).map(|_| rng.next() + 1e-3).collect();
    normalize(&mut x);
    let tol = (1e-10 * (1.0 + e.abs())).max(1e3 * f64::EPSILON * hnorm);
    for it in 0..MAX_INVERSE_ITERATIONS {
        lu.solve_in_place(&mut x);
        for q in previous {
            let c = dot(&x, q);
            x.iter_mut().zip(q).for_each(|(v, w)| *v -= c * w);
        }
        if normalize(&mut x) == 0.0 || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenNonConvergence { level: level + 1 });
        }
        let hx = h.mul_vec(&x);
        let res = math::sqrt(
            hx.iter()
                .zip(&x)
                .map(|(a, b)| (a - e * b) * (a - e * b))
                .sum::<f64>(),
        );
        if it >= 1 && res <= tol {
            let lead = x.iter().copied().find(|v| v.abs() > 1e-300).unwrap_or(1.0);
            if lead < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(x);
        }
    }
    Err(Error::EigenNonConvergence { level: level + 1 })
}

/// `dE_p[V].W = ∫ |ψ_p[V]|² W`, with `p` counted from 1.
pub fn eigenvalue_derivative(v: &Potential, w: &GridFunction, p: usize, grid: &Grid) -> Result<f64> {
    if p == 0 {
        return Err(Error::invalid("levels are counted from 1"));
    }
    if w.grid() != grid {
        return Err(Error::invalid("perturbation is not sampled on the given grid"));
    }
    let h = assemble_hamiltonian(v, grid)?;
    let spec = lowest_eigenpairs(&h, p, grid)?;
    Ok(density_moment(spec.state(p), w))
}

pub(crate) fn density_moment(psi: &GridFunction, w: &GridFunction) -> f64 {
    let h = psi.grid().h();
    let sq: Vec<f64> = psi
        .values()
        .iter()
        .zip(w.values())
        .map(|(a, b)| a * a * b)
        .collect();
    grid::trapezoid(&sq, h)
}

/// `dψ_p[V].W`, the first-order response of the normalized, sign-fixed state
/// `ψ_p` to the perturbation `V → V + tW`, with `p` counted from 1.
pub fn eigenfunction_derivative(
    v: &Potential,
    w: &GridFunction,
    p: usize,
    grid: &Grid,
) -> Result<GridFunction> {
    if p == 0 {
        return Err(Error::invalid("levels are counted from 1"));
    }
    if w.grid() != grid {
        return Err(Error::invalid("perturbation is not sampled on the given grid"));
    }
    let h = assemble_hamiltonian(v, grid)?;
    let spec = lowest_eigenpairs(&h, p + 1, grid)?;
    let x = state_response(&h, &spec, p, w.values())?;
    Ok(GridFunction::from_vec(*grid, x))
}

/// Solves `(H − E_p) x = −(W − dE_p) ψ_p` with `x ⊥ ψ_p` by the contraction
/// `(H − E_p + σ) x⁺ = f + σ x`, projected after each step. `spec` must hold
/// level `p + 1` so the shift can be chosen from the neighbouring gaps.
pub(crate) fn state_response(
    h: &TridiagonalSystem,
    spec: &Spectrum,
    p: usize,
    w: &[f64],
) -> Result<Vec<f64>> {
    let e = spec.energy(p);
    let mut gap = spec.energy(p + 1) - e;
    if p >= 2 {
        gap = gap.min(e - spec.energy(p - 1));
    }
    let sigma = 0.25 * gap;
    let hstep = spec.grid().h();
    let psi = spec.state(p).values();
    let m = h.size();
    let de = {
        let sq: Vec<f64> = psi.iter().zip(w).map(|(a, b)| a * a * b).collect();
        grid::trapezoid(&sq, hstep)
    };
    let f: Vec<f64> = (1..=m).map(|i| -(w[i] - de) * psi[i]).collect();
    let project = |x: &mut [f64]| {
        let c = hstep * dot(x, &psi[1..=m]);
        x.iter_mut().zip(&psi[1..=m]).for_each(|(v, q)| *v -= c * q);
    };
    let lu = h.factor_shifted(e - sigma);
    let mut x = vec![0.0; m];
    let hnorm = h.diag().iter().fold(0.0f64, |a, d| a.max(d.abs())) + 2.0 * h.off()[0].abs();
    let tol = (64.0 * f64::EPSILON * hnorm / sigma).max(1e-13);
    for _ in 0..400 {
        let mut next: Vec<f64> = f.iter().zip(&x).map(|(a, b)| a + sigma * b).collect();
        lu.solve_in_place(&mut next);
        project(&mut next);
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        x = next;
        let size = dot(&x, &x);
        if math::sqrt(change) <= tol * math::sqrt(size) || size == 0.0 {
            let mut out = Vec::with_capacity(m + 2);
            out.push(0.0);
            out.extend(x);
            out.push(0.0);
            return Ok(out);
        }
    }
    Err(Error::EigenNonConvergence { level: p })
}
