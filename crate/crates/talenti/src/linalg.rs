//! Small dense/banded linear algebra helpers: the Thomas tridiagonal solve
//! used by the implicit time stepper, and Sturm-sequence bisection with
//! inverse iteration for symmetric tridiagonal eigenpairs.

use crate::{Error, Result};

/// Solve a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i]` in row `i+1`, `upper[i]` multiplies
/// `x[i+1]` in row `i` (both length `m-1`), `diag` has length `m`.
/// No pivoting: callers must supply diagonally dominant or M-matrices,
/// which every discretization in this crate does.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let m = diag.len();
    assert!(m >= 1 && lower.len() == m - 1 && upper.len() == m - 1 && rhs.len() == m);
    let mut c = vec![0.0; m]; // modified upper
    let mut d = vec![0.0; m]; // modified rhs
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::Numerical("tridiagonal solve: zero pivot".into()));
    }
    c[0] = if m > 1 { upper[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..m {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if piv == 0.0 {
            return Err(Error::Numerical("tridiagonal solve: zero pivot".into()));
        }
        if i < m - 1 {
            c[i] = upper[i] / piv;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..m - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Solve a tridiagonal system by Gaussian elimination with partial
/// pivoting (fill-in limited to a second superdiagonal).  Safe for
/// indefinite matrices, unlike [`solve_tridiagonal`].
pub fn solve_tridiagonal_pivot(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let m = diag.len();
    assert!(m >= 1 && lower.len() == m - 1 && upper.len() == m - 1 && rhs.len() == m);
    // Row i is stored as (b[i], c[i], d[i]) over columns (i, i+1, i+2):
    // earlier columns are already eliminated, d is the pivoting fill-in.
    let mut a: Vec<f64> = lower.to_vec();
    let mut b: Vec<f64> = diag.to_vec();
    let mut c: Vec<f64> = upper.to_vec();
    c.push(0.0);
    let mut d = vec![0.0; m];
    let mut x: Vec<f64> = rhs.to_vec();
    for i in 0..m - 1 {
        // Candidate rows over columns (i, i+1, i+2):
        //   row i:   (b[i], c[i], d[i])
        //   row i+1: (a[i], b[i+1], c[i+1])
        if a[i].abs() > b[i].abs() {
            let top = (b[i], c[i], d[i]);
            b[i] = a[i];
            c[i] = b[i + 1];
            d[i] = c[i + 1];
            a[i] = top.0;
            b[i + 1] = top.1;
            c[i + 1] = top.2;
            x.swap(i, i + 1);
        }
        if b[i] == 0.0 {
            return Err(Error::Numerical("pivoted tridiagonal: zero pivot".into()));
        }
        let f = a[i] / b[i];
        b[i + 1] -= f * c[i];
        c[i + 1] -= f * d[i];
        x[i + 1] -= f * x[i];
    }
    if b[m - 1] == 0.0 {
        return Err(Error::Numerical("pivoted tridiagonal: zero pivot".into()));
    }
    for i in (0..m).rev() {
        let mut s = x[i];
        if i + 1 < m {
            s -= c[i] * x[i + 1];
        }
        if i + 2 < m {
            s -= d[i] * x[i + 2];
        }
        x[i] = s / b[i];
    }
    Ok(x)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix
/// `(diag, off)` that are strictly below `x` (Sturm sequence count).
pub fn sturm_count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let m = diag.len();
    assert_eq!(off.len(), m.saturating_sub(1));
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..m {
        let denom = if q == 0.0 { 1e-300 } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) of a symmetric tridiagonal
/// matrix, by Sturm bisection to relative precision ~1e-14.
pub fn tridiag_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    // Gershgorin bounds.
    let m = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < m - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count_below(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of a symmetric tridiagonal matrix for an eigenvalue
/// approximation `lambda`, by inverse iteration with a diagonal shift.
/// Returns the vector normalized to unit Euclidean norm with positive sum.
pub fn tridiag_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let m = diag.len();
    // Shift slightly off the eigenvalue so the solve stays well posed.
    let scale = diag.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
    let shift = lambda + 1e-12 * scale.max(1.0);
    let shifted: Vec<f64> = diag.iter().map(|&d| d - shift).collect();
    let mut v = vec![1.0; m];
    for _ in 0..8 {
        let w = solve_tridiagonal(off, &shifted, off, &v)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        v = w.iter().map(|x| x / norm).collect();
    }
    if v.iter().sum::<f64>() < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    Ok(v)
}
