//! Fast solvers for `(scale * (-Delta_h) + shift) z = f` with the 5-point
//! stencil: FFT on periodic lattices, DST-I on the interior of a square.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{Dst1, DctPlanner};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Lattice;

/// Diagonalizes the periodic 5-point Laplacian on an `nx x ny` lattice.
pub struct PeriodicSpectral {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    // eigenvalues of -Delta_h, stored column-major (index ix * ny + iy)
    eig: Vec<f64>,
}

impl PeriodicSpectral {
    pub fn new(lat: &Lattice) -> Self {
        let (nx, ny) = (lat.nx, lat.ny);
        let mut planner = FftPlanner::new();
        let mut eig = vec![0.0; nx * ny];
        for ix in 0..nx {
            let sx = (PI * ix as f64 / nx as f64).sin();
            for iy in 0..ny {
                let sy = (PI * iy as f64 / ny as f64).sin();
                eig[ix * ny + iy] = 4.0 * sx * sx / (lat.dx * lat.dx) + 4.0 * sy * sy / (lat.dy * lat.dy);
            }
        }
        PeriodicSpectral {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            eig,
        }
    }

    /// Solves `(scale (-Delta_h) + shift) z = rhs`. The constant mode is set to
    /// zero when `drop_mean` is set or when its symbol vanishes.
    pub fn solve(&self, rhs: &[f64], scale: f64, shift: f64, drop_mean: bool, out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let mut rows: Vec<Complex<f64>> = rhs.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd_x.process(&mut rows);
        let mut cols = vec![Complex::new(0.0, 0.0); nx * ny];
        transpose(&rows, &mut cols, nx, ny);
        self.fwd_y.process(&mut cols);
        let norm = 1.0 / (nx * ny) as f64;
        for (c, &e) in cols.iter_mut().zip(&self.eig) {
            let symbol = scale * e + shift;
            *c = if symbol == 0.0 { Complex::new(0.0, 0.0) } else { *c * (norm / symbol) };
        }
        if drop_mean {
            cols[0] = Complex::new(0.0, 0.0);
        }
        self.inv_y.process(&mut cols);
        transpose(&cols, &mut rows, ny, nx);
        self.inv_x.process(&mut rows);
        for (o, c) in out.iter_mut().zip(&rows) {
            *o = c.re;
        }
    }
}

// `src` holds `h` rows of length `w`; `dst` receives `w` rows of length `h`.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], w: usize, h: usize) {
    for r in 0..h {
        for c in 0..w {
            dst[c * h + r] = src[r * w + c];
        }
    }
}

/// Homogeneous Dirichlet problem on the `(n-2) x (n-2)` interior of a square
/// `n x n` lattice with equal spacing.
pub struct DirichletSpectral {
    n: usize,
    dst: Arc<dyn Dst1<f64>>,
    eig: Vec<f64>,
}

impl DirichletSpectral {
    pub fn new(lat: &Lattice) -> Self {
        assert_eq!(lat.nx, lat.ny, "Dirichlet solver needs a square lattice");
        let n = lat.nx;
        let m = n - 2;
        let h2 = lat.dx * lat.dx;
        let one_d: Vec<f64> = (1..=m)
            .map(|k| {
                let s = (PI * k as f64 / (2.0 * (m + 1) as f64)).sin();
                4.0 * s * s / h2
            })
            .collect();
        let mut eig = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                eig[a * m + b] = one_d[a] + one_d[b];
            }
        }
        DirichletSpectral {
            n,
            dst: DctPlanner::new().plan_dst1(m),
            eig,
        }
    }

    /// `rhs` and `out` live on the full lattice; the outer frame of `out` is zero.
    pub fn solve(&self, rhs: &[f64], scale: f64, shift: f64, out: &mut [f64]) {
        let n = self.n;
        let m = n - 2;
        let mut buf = vec![0.0; m * m];
        for iy in 0..m {
            buf[iy * m..(iy + 1) * m].copy_from_slice(&rhs[(iy + 1) * n + 1..(iy + 1) * n + 1 + m]);
        }
        let mut tmp = vec![0.0; m * m];
        self.transform(&mut buf, &mut tmp);
        let norm = (2.0 / (m + 1) as f64).powi(2);
        for (v, &e) in buf.iter_mut().zip(&self.eig) {
            *v *= norm / (scale * e + shift);
        }
        self.transform(&mut buf, &mut tmp);
        out.iter_mut().for_each(|v| *v = 0.0);
        for iy in 0..m {
            out[(iy + 1) * n + 1..(iy + 1) * n + 1 + m].copy_from_slice(&buf[iy * m..(iy + 1) * m]);
        }
    }

    // 2-D DST-I; the result is left in `buf` (the eigenvalue table is symmetric,
    // so the transposed intermediate needs no bookkeeping).
    fn transform(&self, buf: &mut [f64], tmp: &mut [f64]) {
        let m = self.n - 2;
        for row in buf.chunks_exact_mut(m) {
            self.dst.process_dst1(row);
        }
        transpose(buf, tmp, m, m);
        for row in tmp.chunks_exact_mut(m) {
            self.dst.process_dst1(row);
        }
        transpose(tmp, buf, m, m);
    }
}
