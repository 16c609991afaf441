//! Thomas algorithm for tridiagonal systems.

use std::ops::{Div, Mul, Sub};

/// Solve `lower[i]·x[i−1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]` in place.
///
/// `lower[0]` and `upper[n−1]` are ignored. `scratch` must have length n.
/// No pivoting: the caller guarantees diagonal dominance.
pub fn solve_in_place<T>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T], scratch: &mut [T])
where
    T: Copy + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && scratch.len() == n);
    if n == 0 {
        return;
    }
    let mut beta = diag[0];
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * scratch[i];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - scratch[i + 1] * rhs[i + 1];
    }
}
