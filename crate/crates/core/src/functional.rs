//! Discrete convex functional shared by the planar and periodic problems.
//!
//! Per unit cell area,
//!
//! ```text
//! f(w) = 1/(2 lambda) sum_edges |dw/h|^2
//!      + sum_nodes sum_i [ c_i e^{(Lw)_i} - beta_i w_i - kappa c_i ]
//! ```
//!
//! where `kappa` is 1 on the plane (so that `f(0) = 0`) and 0 on the torus.
//! Fields are stored flat, species-major: `w[i * len + k]`.
//! The gradient of `f` is the discrete residual of the Euler-Lagrange system
//! `-(1/lambda) Delta_h w + L^T (c e^{Lw}) - beta = 0`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::matrix::CouplingMatrix;

/// Exponents above this abort the evaluation as a diverged iterate.
pub const EXPONENT_GUARD: f64 = 700.0;

pub struct DiscreteFunctional<'a> {
    pub lat: &'a Lattice,
    /// Unknown nodes; `None` means every node.
    pub active: Option<&'a [bool]>,
    pub lambda: f64,
    pub l_diag: Vec<f64>,
    pub l_sub: Vec<f64>,
    pub c: &'a [Vec<f64>],
    pub beta: &'a [Vec<f64>],
    pub kappa: f64,
}

impl<'a> DiscreteFunctional<'a> {
    pub fn new(
        lat: &'a Lattice,
        active: Option<&'a [bool]>,
        lambda: f64,
        cm: &CouplingMatrix,
        c: &'a [Vec<f64>],
        beta: &'a [Vec<f64>],
        kappa: f64,
    ) -> Self {
        DiscreteFunctional {
            lat,
            active,
            lambda,
            l_diag: cm.l_diag(),
            l_sub: cm.l_sub(),
            c,
            beta,
            kappa,
        }
    }

    pub fn m(&self) -> usize {
        self.l_diag.len()
    }

    pub fn len(&self) -> usize {
        self.lat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lat.is_empty()
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.active.is_none_or(|a| a[k])
    }

    #[inline]
    fn exponent(&self, w: &[f64], i: usize, k: usize) -> f64 {
        let n = self.len();
        let own = self.l_diag[i] * w[i * n + k];
        if i == 0 {
            own
        } else {
            own + self.l_sub[i] * w[(i - 1) * n + k]
        }
    }

    /// `(Lw)_i` at every node.
    pub fn transform(&self, w: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut v = vec![0.0; w.len()];
        for i in 0..self.m() {
            for k in 0..n {
                v[i * n + k] = self.exponent(w, i, k);
            }
        }
        v
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        let n = self.len();
        let mut dirichlet = 0.0;
        for i in 0..self.m() {
            dirichlet += self.lat.dirichlet_energy(&w[i * n..(i + 1) * n], self.active);
        }
        let mut potential = 0.0;
        for k in 0..n {
            if !self.is_active(k) {
                continue;
            }
            for i in 0..self.m() {
                let e = self.exponent(w, i, k);
                if e > EXPONENT_GUARD {
                    return Err(Error::Diverged { exponent: e });
                }
                let c = self.c[i][k];
                potential += c * e.exp() - self.beta[i][k] * w[i * n + k] - self.kappa * c;
            }
        }
        Ok(dirichlet / (2.0 * self.lambda) + potential)
    }

    /// `W_i = c_i e^{(Lw)_i}`, zero on inactive nodes.
    pub fn weights(&self, w: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut out = vec![0.0; w.len()];
        for i in 0..self.m() {
            for k in 0..n {
                if !self.is_active(k) {
                    continue;
                }
                let e = self.exponent(w, i, k);
                if e > EXPONENT_GUARD {
                    return Err(Error::Diverged { exponent: e });
                }
                out[i * n + k] = self.c[i][k] * e.exp();
            }
        }
        Ok(out)
    }

    /// `out = L^T y` per node, on active nodes only.
    fn apply_lt(&self, y: &[f64], out: &mut [f64], add: bool) {
        let n = self.len();
        let m = self.m();
        for i in 0..m {
            for k in 0..n {
                if !self.is_active(k) {
                    continue;
                }
                let mut s = self.l_diag[i] * y[i * n + k];
                if i + 1 < m {
                    s += self.l_sub[i + 1] * y[(i + 1) * n + k];
                }
                if add {
                    out[i * n + k] += s;
                } else {
                    out[i * n + k] = s;
                }
            }
        }
    }

    fn add_scaled_laplacian(&self, w: &[f64], out: &mut [f64]) {
        let n = self.len();
        let inv = 1.0 / self.lambda;
        let mut lap = vec![0.0; n];
        for i in 0..self.m() {
            self.lat.neg_laplacian(&w[i * n..(i + 1) * n], self.active, &mut lap);
            for k in 0..n {
                out[i * n + k] += inv * lap[k];
            }
        }
    }

    /// Gradient of `f`: `-(1/lambda) Delta_h w + L^T (c e^{Lw}) - beta`, zero on inactive nodes.
    pub fn gradient(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.len();
        let weights = self.weights(w)?;
        self.apply_lt(&weights, out, false);
        for i in 0..self.m() {
            for k in 0..n {
                if self.is_active(k) {
                    out[i * n + k] -= self.beta[i][k];
                } else {
                    out[i * n + k] = 0.0;
                }
            }
        }
        self.add_scaled_laplacian(w, out);
        Ok(())
    }

    /// Hessian-vector product `-(1/lambda) Delta_h d + L^T (W o Ld)`.
    pub fn hessian_apply(&self, weights: &[f64], d: &[f64], out: &mut [f64]) {
        let n = self.len();
        let mut y = self.transform(d);
        for (yv, wv) in y.iter_mut().zip(weights) {
            *yv *= wv;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        self.apply_lt(&y, out, false);
        self.add_scaled_laplacian(d, out);
        if let Some(active) = self.active {
            for i in 0..self.m() {
                for k in 0..n {
                    if !active[k] {
                        out[i * n + k] = 0.0;
                    }
                }
            }
        }
    }

    /// Mean of each weight field over the active nodes.
    pub fn mean_weights(&self, weights: &[f64]) -> Vec<f64> {
        let n = self.len();
        let count = (0..n).filter(|&k| self.is_active(k)).count().max(1) as f64;
        (0..self.m())
            .map(|i| weights[i * n..(i + 1) * n].iter().sum::<f64>() / count)
            .collect()
    }
}

/// Eigen-decomposition of `L^T diag(wbar) L`: the species block of the Hessian
/// with spatially averaged weights. Returns `(Q, theta)` with `C = Q diag(theta) Q^T`.
pub fn species_mixing(l_diag: &[f64], l_sub: &[f64], wbar: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let m = l_diag.len();
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        l[(i, i)] = l_diag[i];
        if i > 0 {
            l[(i, i - 1)] = l_sub[i];
        }
    }
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(wbar));
    let c = l.transpose() * w * &l;
    let eig = SymmetricEigen::new(c);
    let theta = eig.eigenvalues.iter().map(|&t| t.max(0.0)).collect();
    (eig.eigenvectors, theta)
}

/// `out[q * n + k] = sum_i Q_iq x[i * n + k]` (or with `Q` when `transpose` is false).
pub fn mix_species(q: &DMatrix<f64>, x: &[f64], n: usize, transpose: bool, out: &mut [f64]) {
    let m = q.nrows();
    out.iter_mut().for_each(|v| *v = 0.0);
    for a in 0..m {
        for b in 0..m {
            let coef = if transpose { q[(b, a)] } else { q[(a, b)] };
            if coef == 0.0 {
                continue;
            }
            let (dst, src) = (a * n, b * n);
            for k in 0..n {
                out[dst + k] += coef * x[src + k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;

    #[test]
    fn hessian_matches_gradient_differences() {
        let grid = TorusGrid::new(1.0, 1.0, 8, 8).unwrap();
        let lat = &grid.lattice;
        let cm = CouplingMatrix::new(0.5, 3).unwrap();
        let n = lat.len();
        let c: Vec<Vec<f64>> = (0..3).map(|i| (0..n).map(|k| 1.0 + 0.1 * ((k + i) % 5) as f64).collect()).collect();
        let beta: Vec<Vec<f64>> = (0..3).map(|i| vec![0.3 + 0.1 * i as f64; n]).collect();
        let f = DiscreteFunctional::new(lat, None, 4.0, &cm, &c, &beta, 0.0);
        let w: Vec<f64> = (0..3 * n).map(|k| 0.01 * ((k * 31) % 17) as f64).collect();
        let d: Vec<f64> = (0..3 * n).map(|k| 0.1 * ((k * 7) % 5) as f64 - 0.2).collect();
        let weights = f.weights(&w).unwrap();
        let mut hd = vec![0.0; 3 * n];
        f.hessian_apply(&weights, &d, &mut hd);
        let eps = 1e-6;
        let plus: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
        let mut gp = vec![0.0; 3 * n];
        let mut gm = vec![0.0; 3 * n];
        f.gradient(&plus, &mut gp).unwrap();
        f.gradient(&minus, &mut gm).unwrap();
        for k in 0..3 * n {
            let fd = (gp[k] - gm[k]) / (2.0 * eps);
            assert!((fd - hd[k]).abs() < 1e-6 * (1.0 + hd[k].abs()));
        }
    }

    #[test]
    fn mixing_diagonalizes_block() {
        let cm = CouplingMatrix::new(1.0, 3).unwrap();
        let (q, theta) = species_mixing(&cm.l_diag(), &cm.l_sub(), &[0.5, 0.3, 0.2]);
        let back = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(theta)) * q.transpose();
        let direct = cm.l.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.3, 0.2])) * &cm.l;
        assert!((back - direct).abs().max() < 1e-12);
    }

    #[test]
    fn overflow_guard_trips() {
        let grid = TorusGrid::new(1.0, 1.0, 4, 4).unwrap();
        let cm = CouplingMatrix::new(0.0, 2).unwrap();
        let n = grid.lattice.len();
        let c = vec![vec![1.0; n]; 2];
        let beta = vec![vec![0.0; n]; 2];
        let f = DiscreteFunctional::new(&grid.lattice, None, 1.0, &cm, &c, &beta, 0.0);
        let w = vec![800.0; 2 * n];
        assert!(matches!(f.value(&w), Err(Error::Diverged { .. })));
    }
}
