//! Thomas algorithm for tridiagonal systems with real off-diagonals.

use num_complex::Complex64;

use super::Amp;
use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-300;

/// Solves `Tri(lower, diag, upper) x = rhs` by forward elimination and back substitution.
///
/// `lower[i]` couples row `i + 1` to column `i`; `upper[i]` couples row `i` to column `i + 1`.
pub fn thomas_solve(
    lower: &[f64],
    diag: &[Complex64],
    upper: &[f64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
        return Err(Error::Contract(format!(
            "tridiagonal shapes do not agree: lower {}, diag {n}, upper {}, rhs {}",
            lower.len(),
            upper.len(),
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let factor = Tridiagonal::factor(lower, diag, upper)?;
    let mut x = rhs.to_vec();
    factor.solve_in_place(&mut x);
    Ok(x)
}

/// Forward-eliminated form of a fixed tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal<T> {
    lower: Vec<f64>,
    /// Modified super-diagonal `c'_i`.
    sweep: Vec<T>,
    /// Reciprocal pivots.
    inv_pivot: Vec<T>,
}

impl<T: Amp> Tridiagonal<T> {
    pub(crate) fn factor(lower: &[f64], diag: &[T], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut sweep = Vec::with_capacity(n);
        let mut inv_pivot = Vec::with_capacity(n);
        let mut prev_sweep = T::zero();
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - prev_sweep * lower[i - 1]
            };
            if !(pivot.norm_sqr() > PIVOT_EPS) || !pivot.norm_sqr().is_finite() {
                return Err(Error::Singular { row: i });
            }
            let inv = pivot.recip();
            let c = if i + 1 < n { inv * upper[i] } else { T::zero() };
            sweep.push(c);
            inv_pivot.push(inv);
            prev_sweep = c;
        }
        Ok(Tridiagonal {
            lower: lower.to_vec(),
            sweep,
            inv_pivot,
        })
    }

    pub(crate) fn solve_in_place(&self, x: &mut [T]) {
        let n = x.len();
        debug_assert_eq!(n, self.inv_pivot.len());
        x[0] = x[0] * self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - x[i - 1] * self.lower[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.sweep[i] * x[i + 1];
        }
    }
}

/// Two-sided elimination of a fixed tridiagonal matrix: rows above the middle are
/// eliminated top-down, rows below bottom-up, and the two sweeps meet at the middle
/// row. The two halves form independent recurrences, so each sweep carries two
/// dependency chains instead of one.
#[derive(Debug, Clone)]
pub(crate) struct TwoSided<T> {
    mid: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Top half: `x_i = y_i - top_c[i] x_{i+1}`; `y_i = r_i top_inv[i] - top_m[i] y_{i-1}`.
    top_c: Vec<T>,
    top_inv: Vec<T>,
    top_m: Vec<T>,
    /// Bottom half: `x_i = z_i - bot_e[i] x_{i-1}`; `z_i = r_i bot_inv[i] - bot_m[i] z_{i+1}`.
    bot_e: Vec<T>,
    bot_inv: Vec<T>,
    bot_m: Vec<T>,
    mid_inv: T,
}

fn checked_inv<T: Amp>(pivot: T, row: usize) -> Result<T> {
    let mag = pivot.norm_sqr();
    if !(mag > PIVOT_EPS) || !mag.is_finite() {
        return Err(Error::Singular { row });
    }
    Ok(pivot.recip())
}

impl<T: Amp> TwoSided<T> {
    pub(crate) fn factor(lower: &[f64], diag: &[T], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 3, "two-sided elimination needs at least 3 rows");
        let mid = n / 2;
        let mut top_c = vec![T::zero(); mid];
        let mut top_inv = vec![T::zero(); mid];
        let mut top_m = vec![T::zero(); mid];
        for i in 0..mid {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - top_c[i - 1] * lower[i - 1]
            };
            let inv = checked_inv(pivot, i)?;
            top_inv[i] = inv;
            top_c[i] = inv * upper[i];
            top_m[i] = if i == 0 {
                T::zero()
            } else {
                inv * lower[i - 1]
            };
        }
        let mut bot_e = vec![T::zero(); n];
        let mut bot_inv = vec![T::zero(); n];
        let mut bot_m = vec![T::zero(); n];
        for i in (mid + 1..n).rev() {
            let pivot = if i == n - 1 {
                diag[i]
            } else {
                diag[i] - bot_e[i + 1] * upper[i]
            };
            let inv = checked_inv(pivot, i)?;
            bot_inv[i] = inv;
            bot_e[i] = inv * lower[i - 1];
            bot_m[i] = if i == n - 1 {
                T::zero()
            } else {
                inv * upper[i]
            };
        }
        let mid_pivot = diag[mid] - top_c[mid - 1] * lower[mid - 1] - bot_e[mid + 1] * upper[mid];
        let mid_inv = checked_inv(mid_pivot, mid)?;
        Ok(TwoSided {
            mid,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            top_c,
            top_inv,
            top_m,
            bot_e,
            bot_inv,
            bot_m,
            mid_inv,
        })
    }

    pub(crate) fn solve_in_place(&self, x: &mut [T]) {
        let n = x.len();
        let mid = self.mid;
        debug_assert_eq!(n, self.bot_inv.len());
        // forward sweeps: i runs down from the top, j up from the bottom
        x[0] = x[0] * self.top_inv[0];
        x[n - 1] = x[n - 1] * self.bot_inv[n - 1];
        let mut k = 1;
        while k < mid || n - 1 - k > mid {
            if k < mid {
                x[k] = x[k] * self.top_inv[k] - self.top_m[k] * x[k - 1];
            }
            let j = n - 1 - k;
            if j > mid {
                x[j] = x[j] * self.bot_inv[j] - self.bot_m[j] * x[j + 1];
            }
            k += 1;
        }
        x[mid] = (x[mid] - x[mid - 1] * self.lower[mid - 1] - x[mid + 1] * self.upper[mid])
            * self.mid_inv;
        // back substitution outward from the middle
        let mut k = 1;
        while k <= mid || mid + k < n {
            if k <= mid {
                let i = mid - k;
                x[i] = x[i] - self.top_c[i] * x[i + 1];
            }
            let j = mid + k;
            if j < n {
                x[j] = x[j] - self.bot_e[j] * x[j - 1];
            }
            k += 1;
        }
    }
}
