//! Thomas algorithm for tridiagonal systems.

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place
/// (`lower[0]` and `upper[last]` are ignored). Requires a diagonally dominant
/// matrix; no pivoting.
pub(crate) fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n);
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut b = diag[0];
    c[0] = upper[0] / b;
    rhs[0] /= b;
    for i in 1..n {
        b = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / b;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}
