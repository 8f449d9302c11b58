//! Eigenvalues of symmetric tridiagonal matrices by Sturm-sequence bisection.

/// Number of eigenvalues strictly below `x` for the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`).
///
/// Counts negative pivots of the `LDL^T` factorization of `T - xI`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0_f64;
    for (i, &di) in diag.iter().enumerate() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = if i == 0 { di - x } else { di - x - e2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (di.abs() + x.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based), bisected to machine precision.
pub fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    assert!(k < diag.len(), "eigenvalue index out of range");
    assert_eq!(off.len() + 1, diag.len(), "off-diagonal length mismatch");
    let (mut lo, mut hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= scale * 1e-14;
    hi += scale * 1e-14;
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues in ascending order.
pub fn eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    (0..diag.len()).map(|k| kth_eigenvalue(diag, off, k)).collect()
}
