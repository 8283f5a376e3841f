//! Symmetric tridiagonal systems: Thomas solves, products, Sturm counts and a
//! partially pivoted factorization for shifted (indefinite) solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TridiagonalSystem {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("tridiagonal system must be nonempty"));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::invalid(alloc::format!(
                "off-diagonal length {} does not match diagonal length {}",
                off.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tridiagonal entries must be finite"));
        }
        Ok(TridiagonalSystem { diag, off })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.size();
        assert_eq!(x.len(), m, "vector length must match system size");
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Thomas algorithm without pivoting; intended for SPD systems.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.size();
        if rhs.len() != m {
            return Err(Error::invalid("right-hand side length mismatch"));
        }
        let mut c = vec![0.0; m];
        let mut x = rhs.to_vec();
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: 0 });
        }
        x[0] /= pivot;
        for i in 1..m {
            c[i - 1] = self.off[i - 1] / pivot;
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            x[i] = (x[i] - self.off[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..m - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.size() {
            if i > 0 {
                let b = self.off[i - 1];
                q = (self.diag[i] - x) - b * b / q;
            }
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Interval containing the whole spectrum (Gershgorin discs).
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let m = self.size();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < m {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// LU factorization of `self − shift·I` with partial pivoting.
    pub(crate) fn factor_shifted(&self, shift: f64) -> ShiftedLu {
        let m = self.size();
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; m.saturating_sub(2)];
        let mut swapped = vec![false; m.saturating_sub(1)];
        let scale = self
            .diag
            .iter()
            .chain(&self.off)
            .fold(shift.abs(), |a, v| a.max(v.abs()))
            .max(1.0);
        let floor = f64::EPSILON * scale;
        for i in 0..m.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = floor;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < m {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[m - 1] == 0.0 {
            d[m - 1] = floor;
        }
        ShiftedLu {
            d,
            dl,
            du,
            du2,
            swapped,
        }
    }
}

/// Free-function form of [`TridiagonalSystem::solve`].
pub fn solve_tridiagonal(sys: &TridiagonalSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    sys.solve(rhs)
}

/// Output of [`TridiagonalSystem::factor_shifted`]; zero pivots are replaced
/// by a tiny value so near-singular shifts still yield a usable solve.
pub(crate) struct ShiftedLu {
    d: Vec<f64>,
    dl: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let m = self.d.len();
        for i in 0..m.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[m - 1] /= self.d[m - 1];
        if m > 1 {
            b[m - 2] = (b[m - 2] - self.du[m - 2] * b[m - 1]) / self.d[m - 2];
        }
        for i in (0..m.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
