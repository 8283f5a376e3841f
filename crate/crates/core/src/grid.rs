//! Uniform grids on `[0, L]`, sampled functions, trapezoid quadrature and
//! discrete Sobolev norms.
//!
//! The H¹ seminorm is the exact seminorm of the piecewise-linear interpolant,
//! `Σ (f_{i+1} − f_i)² / h`, which is also the quadratic form of the
//! three-point Laplacian used by the Schrödinger and Poisson discretizations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Smallest admissible number of intervals.
pub const MIN_INTERVALS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("grid length must be positive and finite"));
        }
        if n < MIN_INTERVALS {
            return Err(Error::invalid(alloc::format!(
                "grid needs at least {MIN_INTERVALS} intervals, got {n}"
            )));
        }
        Ok(Grid { length, n })
    }

    /// Grid on `[0, length]` whose spacing is as close as possible to `h`
    /// without exceeding it.
    pub fn with_spacing(length: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        let n = libm::ceil(length / h - 1e-9) as usize;
        Grid::new(length, n.max(MIN_INTERVALS))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of intervals; there are `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node_count(&self) -> usize {
        self.n + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |i| self.node(i))
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n {
            0.5 * self.h()
        } else {
            self.h()
        }
    }
}

/// Real samples of a function at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(alloc::format!(
                "expected {} samples, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid function has non-finite samples"));
        }
        Ok(GridFunction { grid, values })
    }

    /// Unchecked constructor for values produced inside the crate.
    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: alloc::vec![0.0; grid.node_count()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = grid.nodes().map(&mut f).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a·self + b·other`; the grids must match.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("grid mismatch"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear interpolation at `x`, clamped to the grid ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.grid.h();
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= self.grid.length {
            return self.values[self.grid.n];
        }
        let s = x / h;
        let i = (libm::floor(s) as usize).min(self.grid.n - 1);
        let t = s - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Resample onto another grid by linear interpolation.
    pub fn resample(&self, target: Grid) -> Self {
        GridFunction::from_fn(target, |x| self.interpolate(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NormKind {
    L2,
    H1Semi,
    H1,
}

/// Trapezoid rule on the grid of `f`.
pub fn integrate(f: &GridFunction) -> f64 {
    trapezoid(f.values(), f.grid().h())
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

pub fn norm(f: &GridFunction, kind: NormKind) -> f64 {
    let h = f.grid().h();
    match kind {
        NormKind::L2 => math::sqrt(l2_squared(f.values(), h)),
        NormKind::H1Semi => math::sqrt(semi_squared(f.values(), h)),
        NormKind::H1 => math::sqrt(l2_squared(f.values(), h) + semi_squared(f.values(), h)),
    }
}

pub(crate) fn l2_squared(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().map(|v| v * v).sum();
    h * (inner + 0.5 * (values[0] * values[0] + values[n - 1] * values[n - 1]))
}

pub(crate) fn semi_squared(values: &[f64], h: f64) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / h
}

/// H¹ seminorm inner product `Σ (Δa)(Δb) / h`.
pub(crate) fn semi_inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    a.windows(2)
        .zip(b.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[1] - y[0]))
        .sum::<f64>()
        / h
}

/// Trapezoid inner product `∫ a b`.
#[cfg(test)]
pub(crate) fn l2_inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len();
    let inner: f64 = (1..n - 1).map(|i| a[i] * b[i]).sum();
    h * (inner + 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
}

/// `‖a − b‖` for two functions on the same grid.
pub fn distance(a: &GridFunction, b: &GridFunction, kind: NormKind) -> Result<f64> {
    Ok(norm(&a.combine(1.0, b, -1.0)?, kind))
}
