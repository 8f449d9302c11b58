//! The tridiagonal coupling matrix `R(a, m)` and its closed-form Cholesky data.
//!
//! `R` has diagonal `2a^2 + 2i - 1` and off-diagonal `-(a^2 + i)` (1-based).
//! All of its leading principal minors are positive, so it factors as
//! `R = L L^T` with a lower *bidiagonal* `L`. Every quantity here is built
//! from the pivot ratios `q_i = R_i / R_{i-1}` of consecutive minors rather
//! than from the minors themselves, which grow factorially in `m`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tridiag;

/// `R(a, m)` as a dense symmetric matrix.
pub fn build_r(a: f64, m: usize) -> Result<DMatrix<f64>> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!(
            "coupling matrix needs m >= 2, got {m}"
        )));
    }
    let a2 = a * a;
    let mut r = DMatrix::zeros(m, m);
    for i in 0..m {
        let row = (i + 1) as f64;
        r[(i, i)] = 2.0 * a2 + 2.0 * row - 1.0;
        if i + 1 < m {
            r[(i, i + 1)] = -(a2 + row);
            r[(i + 1, i)] = -(a2 + row);
        }
    }
    Ok(r)
}

fn tridiagonal_parts(r: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = r.nrows();
    if m < 2 || r.ncols() != m {
        return Err(Error::InvalidDimension(format!(
            "expected a square matrix with m >= 2, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    let diag = (0..m).map(|i| r[(i, i)]).collect();
    let off = (0..m - 1).map(|i| r[(i + 1, i)]).collect();
    Ok((diag, off))
}

/// Pivot ratios `q_i = R_i / R_{i-1}` (with `R_0 = 1`) of a symmetric
/// tridiagonal matrix, from `q_1 = d_1`, `q_i = d_i - e_{i-1}^2 / q_{i-1}`.
fn pivot_ratios(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let mut q = Vec::with_capacity(diag.len());
    for (i, &d) in diag.iter().enumerate() {
        let qi = if i == 0 {
            d
        } else {
            d - off[i - 1] * off[i - 1] / q[i - 1]
        };
        if !(qi > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: i + 1,
                pivot: qi,
            });
        }
        q.push(qi);
    }
    Ok(q)
}

/// Leading principal minors `R_1, ..., R_m` by the three-term recurrence
/// `R_i = d_i R_{i-1} - e_{i-1}^2 R_{i-2}`. Exact in floating point while the
/// values stay below 2^53 (e.g. `i!` for `a = 0`, `m <= 18`).
pub fn leading_minors(a: f64, m: usize) -> Result<Vec<f64>> {
    let r = build_r(a, m)?;
    let (diag, off) = tridiagonal_parts(&r)?;
    let mut minors: Vec<f64> = Vec::with_capacity(m);
    for i in 0..m {
        let prev = if i == 0 { 1.0 } else { minors[i - 1] };
        let prev2 = if i <= 1 { 1.0 } else { minors[i - 2] };
        let value = if i == 0 {
            diag[0]
        } else {
            diag[i] * prev - off[i - 1] * off[i - 1] * prev2
        };
        minors.push(value);
    }
    Ok(minors)
}

/// Cholesky factor of a symmetric positive definite tridiagonal matrix:
/// `L_ii = sqrt(R_i / R_{i-1})`, `L_{i,i-1} = R_{i,i-1} sqrt(R_{i-2} / R_{i-1})`,
/// zero elsewhere.
pub fn cholesky_factor(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (diag, off) = tridiagonal_parts(r)?;
    let q = pivot_ratios(&diag, &off)?;
    let m = diag.len();
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        l[(i, i)] = q[i].sqrt();
        if i > 0 {
            l[(i, i - 1)] = off[i - 1] / q[i - 1].sqrt();
        }
    }
    Ok(l)
}

/// Inverse of the bidiagonal Cholesky factor in closed form.
///
/// With `L_{l+1,l} = -(a^2 + l) sqrt(R_{l-1}/R_l)` the entries reduce to
/// `(L^-1)_ij = (a^2+j)...(a^2+i-1) R_{j-1} / sqrt(R_{i-1} R_i)`, which in terms
/// of `L` itself is `prod_{l=j}^{i-1} (-L_{l+1,l} / L_ll) / L_ii`.
pub fn invert_l(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = l.nrows();
    if l.ncols() != m || m == 0 {
        return Err(Error::InvalidDimension(format!(
            "expected a square lower-triangular matrix, got {}x{}",
            l.nrows(),
            l.ncols()
        )));
    }
    let mut inv = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut chain = 1.0;
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..m {
            chain *= -l[(i, i - 1)] / l[(i - 1, i - 1)];
            inv[(i, j)] = chain / l[(i, i)];
        }
    }
    Ok(inv)
}

/// `R^-1 = (L^-1)^T L^-1`.
pub fn invert_r(l_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = l_inv.transpose() * l_inv;
    // exact symmetry regardless of summation order
    let m = out.nrows();
    for i in 0..m {
        for j in 0..i {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    out
}

/// Row sums `r_i = sum_j (R^-1)_ij`.
pub fn r_vector(r_inv: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(r_inv.nrows(), r_inv.row_iter().map(|row| row.sum()))
}

/// `lambda_0 = 2 * min eig(R)`, by Sturm bisection on the tridiagonal entries.
pub fn lambda_zero(r: &DMatrix<f64>) -> Result<f64> {
    let (diag, off) = tridiagonal_parts(r)?;
    Ok(2.0 * tridiag::kth_eigenvalue(&diag, &off, 0))
}

/// One of the `m` strict inequalities of the periodic existence criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceCondition {
    /// `4 pi sum_j (R^-1)_ij n_j`
    pub lhs: f64,
    /// `lambda |Omega| sum_j (R^-1)_ij`
    pub rhs: f64,
    pub holds: bool,
}

/// Per-index verdicts plus the natural-constraint targets
/// `K_i = |Omega| r_i - (4 pi / lambda) sum_j (R^-1)_ij n_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceReport {
    pub conditions: Vec<ExistenceCondition>,
    pub k: Vec<f64>,
}

impl ExistenceReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    /// 0-based index of the first violated condition.
    pub fn first_failure(&self) -> Option<usize> {
        self.conditions.iter().position(|c| !c.holds)
    }

    pub fn failing_indices(&self) -> Vec<usize> {
        self.conditions
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.holds)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `R(a, m)` together with everything derived from it.
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub a: f64,
    pub r_mat: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub l_inv: DMatrix<f64>,
    pub r_inv: DMatrix<f64>,
    pub r: DVector<f64>,
    pub minors: Vec<f64>,
    pub lambda0: f64,
}

impl CouplingMatrix {
    pub fn new(a: f64, m: usize) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Config(format!("deformation a must be >= 0, got {a}")));
        }
        let r_mat = build_r(a, m)?;
        let l = cholesky_factor(&r_mat)?;
        let l_inv = invert_l(&l)?;
        let r_inv = invert_r(&l_inv);
        let r = r_vector(&r_inv);
        let (diag, off) = tridiagonal_parts(&r_mat)?;
        let q = pivot_ratios(&diag, &off)?;
        let mut minors = Vec::with_capacity(m);
        let mut acc = 1.0;
        for qi in q {
            acc *= qi;
            minors.push(acc);
        }
        if m <= 20 {
            // recurrence is exact for integer a^2 where the product of ratios may round
            minors = leading_minors(a, m)?;
        }
        let lambda0 = lambda_zero(&r_mat)?;
        Ok(CouplingMatrix {
            a,
            r_mat,
            l,
            l_inv,
            r_inv,
            r,
            minors,
            lambda0,
        })
    }

    pub fn m(&self) -> usize {
        self.r_mat.nrows()
    }

    /// `L_{i,i-1}` for `i >= 1` (0-based), zero for `i = 0`.
    pub fn l_sub(&self) -> Vec<f64> {
        (0..self.m())
            .map(|i| if i == 0 { 0.0 } else { self.l[(i, i - 1)] })
            .collect()
    }

    pub fn l_diag(&self) -> Vec<f64> {
        (0..self.m()).map(|i| self.l[(i, i)]).collect()
    }

    /// `(R^-1 n)_i`
    pub fn r_inv_times(&self, n: &[usize]) -> Vec<f64> {
        let m = self.m();
        (0..m)
            .map(|i| (0..m).map(|j| self.r_inv[(i, j)] * n[j] as f64).sum())
            .collect()
    }

    pub fn check_torus_existence(&self, lambda: f64, n: &[usize], area: f64) -> Result<ExistenceReport> {
        let m = self.m();
        if n.len() != m {
            return Err(Error::Config(format!(
                "vortex counts have length {}, expected m = {m}",
                n.len()
            )));
        }
        if !(area > 0.0) {
            return Err(Error::Config(format!("cell area must be > 0, got {area}")));
        }
        let weighted = self.r_inv_times(n);
        let mut conditions = Vec::with_capacity(m);
        let mut k = Vec::with_capacity(m);
        for i in 0..m {
            let lhs = 4.0 * PI * weighted[i];
            let rhs = lambda * area * self.r[i];
            conditions.push(ExistenceCondition {
                lhs,
                rhs,
                holds: lhs < rhs,
            });
            k.push(area * self.r[i] - 4.0 * PI / lambda * weighted[i]);
        }
        Ok(ExistenceReport { conditions, k })
    }

    /// Smallest `lambda` at which a periodic solution fails to exist:
    /// `4 pi max_i [(R^-1 n)_i / r_i] / |Omega|`. Solutions exist iff `lambda` exceeds it.
    pub fn existence_threshold_lambda(&self, n: &[usize], area: f64) -> f64 {
        let weighted = self.r_inv_times(n);
        let worst = (0..self.m())
            .map(|i| weighted[i] / self.r[i])
            .fold(0.0, f64::max);
        4.0 * PI * worst / area
    }
}

/// Existence verdict for the doubly periodic problem with cell area `area`.
pub fn check_torus_existence(
    params: &crate::params::ModelParams,
    n: &[usize],
    area: f64,
) -> Result<ExistenceReport> {
    CouplingMatrix::new(params.a, params.m)?.check_torus_existence(params.lambda, n, area)
}
