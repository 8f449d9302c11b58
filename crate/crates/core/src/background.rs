//! Background functions carrying the vortex singularities.
//!
//! The primary stored quantity is `e^{u0}`, which is finite everywhere and
//! vanishes at the vortex points.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{DiskGrid, Lattice, TorusGrid};
use crate::matrix::CouplingMatrix;
use crate::params::ModelParams;
use crate::spectral::PeriodicSpectral;
use crate::vortex::VortexConfiguration;

const MAX_DOUBLINGS: usize = 60;

/// `u0_i = -sum_s ln(1 + nu / |x - p_s|^2)` and `g_i = sum_s 4 nu / (nu + |x - p_s|^2)^2`
/// sampled on a disk grid, together with `h = L^-1 g / lambda` and
/// `h~_i = sum_j (R^-1)_ji g_j / (lambda r_i)`.
#[derive(Clone, Debug)]
pub struct PlanarBackground {
    pub nu: f64,
    pub u0: Vec<Vec<f64>>,
    pub e0: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub h_tilde: Vec<Vec<f64>>,
    /// Set when some vortex sits exactly on a node; that node then uses
    /// `|x - p|^2 = dx^2 / 2` (half the cell diagonal, squared).
    pub coincident: bool,
}

struct Sampled {
    u0: f64,
    e0: f64,
    g: f64,
    coincident: bool,
}

fn sample(points: &[[f64; 2]], x: [f64; 2], nu: f64, floor: f64) -> Sampled {
    let mut s = Sampled {
        u0: 0.0,
        e0: 1.0,
        g: 0.0,
        coincident: false,
    };
    for p in points {
        let mut d2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
        if d2 < 1e-18 * floor {
            d2 = floor;
            s.coincident = true;
        }
        s.u0 -= (nu / d2).ln_1p();
        s.e0 *= d2 / (d2 + nu);
        s.g += 4.0 * nu / (nu + d2).powi(2);
    }
    s
}

fn h_tilde_at(cm: &CouplingMatrix, lambda: f64, g: &[f64], out: &mut [f64]) {
    let m = g.len();
    for i in 0..m {
        let s: f64 = (0..m).map(|j| cm.r_inv[(j, i)] * g[j]).sum();
        out[i] = s / (lambda * cm.r[i]);
    }
}

impl PlanarBackground {
    pub fn new(
        cfg: &VortexConfiguration,
        grid: &DiskGrid,
        cm: &CouplingMatrix,
        lambda: f64,
        nu: f64,
    ) -> Result<Self> {
        let m = cm.m();
        cfg.check_m(m)?;
        if !(nu > 0.0) {
            return Err(Error::Config(format!("nu must be > 0, got {nu}")));
        }
        let lat = &grid.lattice;
        let floor = 0.5 * lat.dx * lat.dx;
        let len = lat.len();
        let mut bg = PlanarBackground {
            nu,
            u0: vec![vec![0.0; len]; m],
            e0: vec![vec![1.0; len]; m],
            g: vec![vec![0.0; len]; m],
            h: vec![vec![0.0; len]; m],
            h_tilde: vec![vec![0.0; len]; m],
            coincident: false,
        };
        for i in 0..m {
            for k in 0..len {
                let s = sample(&cfg.points[i], lat.position(k), nu, floor);
                bg.u0[i][k] = s.u0;
                bg.e0[i][k] = s.e0;
                bg.g[i][k] = s.g;
                bg.coincident |= s.coincident;
            }
        }
        let mut gk = vec![0.0; m];
        let mut ht = vec![0.0; m];
        for k in 0..len {
            for i in 0..m {
                gk[i] = bg.g[i][k];
            }
            h_tilde_at(cm, lambda, &gk, &mut ht);
            for i in 0..m {
                bg.h_tilde[i][k] = ht[i];
                let s: f64 = (0..=i).map(|j| cm.l_inv[(i, j)] * gk[j]).sum();
                bg.h[i][k] = s / lambda;
            }
        }
        Ok(bg)
    }

    /// `sup |h~_i|` over the free nodes.
    pub fn h_tilde_sup(&self, grid: &DiskGrid) -> f64 {
        self.h_tilde
            .iter()
            .flat_map(|f| f.iter().zip(&grid.free).filter(|(_, &fr)| fr).map(|(v, _)| v.abs()))
            .fold(0.0, f64::max)
    }
}

fn h_tilde_sup_for(
    cfg: &VortexConfiguration,
    probes: &[[f64; 2]],
    cm: &CouplingMatrix,
    lambda: f64,
    nu: f64,
    floor: f64,
) -> f64 {
    let m = cm.m();
    let mut g = vec![0.0; m];
    let mut ht = vec![0.0; m];
    let mut sup: f64 = 0.0;
    for &x in probes {
        for i in 0..m {
            g[i] = sample(&cfg.points[i], x, nu, floor).g;
        }
        h_tilde_at(cm, lambda, &g, &mut ht);
        sup = ht.iter().fold(sup, |acc, v| acc.max(v.abs()));
    }
    sup
}

/// Smallest `nu` in `1, 2, 4, ...` with `sup |h~_i| <= 1/2`, probing the free
/// nodes of `grid` and the vortex points themselves (where `g` peaks).
/// Returns the chosen value and the sup recorded at every step.
pub fn autotune_nu(
    cfg: &VortexConfiguration,
    grid: &DiskGrid,
    params: &ModelParams,
    cm: &CouplingMatrix,
) -> Result<(f64, Vec<f64>)> {
    cfg.check_m(cm.m())?;
    let lat = &grid.lattice;
    let mut probes: Vec<[f64; 2]> = (0..lat.len())
        .filter(|&k| grid.free[k])
        .map(|k| lat.position(k))
        .collect();
    probes.extend(cfg.points.iter().flatten().copied());
    let floor = 0.5 * lat.dx * lat.dx;
    let mut history = Vec::new();
    let mut nu = 1.0;
    for _ in 0..=MAX_DOUBLINGS {
        let sup = h_tilde_sup_for(cfg, &probes, cm, params.lambda, nu, floor);
        history.push(sup);
        if sup <= 0.5 {
            return Ok((nu, history));
        }
        nu *= 2.0;
    }
    Err(Error::NuAutotune {
        doublings: MAX_DOUBLINGS,
        last_sup: *history.last().unwrap_or(&f64::NAN),
    })
}

/// Mean-zero periodic solution of `Delta_h u0_i = 4 pi sum_s delta_h(x - p_s) - 4 pi n_i / |Omega|`,
/// with `delta_h` equal to `1 / cell area` at the nearest node.
#[derive(Clone, Debug)]
pub struct TorusBackground {
    pub u0: Vec<Vec<f64>>,
    pub e0: Vec<Vec<f64>>,
    /// Node index of every vortex, per species.
    pub vortex_nodes: Vec<Vec<usize>>,
    /// `max |Delta_h u0 - source| / max |source|` over all species.
    pub source_residual: f64,
}

impl TorusBackground {
    pub fn new(cfg: &VortexConfiguration, grid: &TorusGrid) -> Result<Self> {
        let lat = &grid.lattice;
        let sp = PeriodicSpectral::new(lat);
        Self::with_solver(cfg, grid, &sp)
    }

    pub fn with_solver(cfg: &VortexConfiguration, grid: &TorusGrid, sp: &PeriodicSpectral) -> Result<Self> {
        let lat = &grid.lattice;
        let len = lat.len();
        let m = cfg.m();
        let inv_cell = 1.0 / lat.cell_area();
        let mut bg = TorusBackground {
            u0: vec![vec![0.0; len]; m],
            e0: vec![vec![1.0; len]; m],
            vortex_nodes: vec![Vec::new(); m],
            source_residual: 0.0,
        };
        let mut lap = vec![0.0; len];
        for i in 0..m {
            if cfg.points[i].is_empty() {
                continue;
            }
            let mut source = vec![-4.0 * PI * cfg.points[i].len() as f64 / grid.area(); len];
            for &p in &cfg.points[i] {
                let k = grid.nearest_node(p);
                bg.vortex_nodes[i].push(k);
                source[k] += 4.0 * PI * inv_cell;
            }
            let neg: Vec<f64> = source.iter().map(|v| -v).collect();
            sp.solve(&neg, 1.0, 0.0, true, &mut bg.u0[i]);
            lat.neg_laplacian(&bg.u0[i], None, &mut lap);
            let scale = source.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            let err = lap
                .iter()
                .zip(&source)
                .fold(0.0, |a: f64, (l, s)| a.max((l + s).abs()));
            bg.source_residual = bg.source_residual.max(err / scale);
            for (e, u) in bg.e0[i].iter_mut().zip(&bg.u0[i]) {
                *e = u.exp();
            }
        }
        Ok(bg)
    }
}

/// `integral e^{u0_i}` by cell quadrature.
pub(crate) fn integrate(lat: &Lattice, f: &[f64]) -> f64 {
    f.iter().sum::<f64>() * lat.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_configuration_is_trivial() {
        let cm = CouplingMatrix::new(0.0, 2).unwrap();
        let grid = DiskGrid::new(3.0, 20).unwrap();
        let cfg = VortexConfiguration::empty(2);
        let bg = PlanarBackground::new(&cfg, &grid, &cm, 4.0, 1.0).unwrap();
        assert!(bg.u0.iter().flatten().all(|&v| v == 0.0));
        assert!(bg.g.iter().flatten().all(|&v| v == 0.0));
        assert!(bg.e0.iter().flatten().all(|&v| v == 1.0));
        let p = ModelParams::new(2, 0.0, 4.0).unwrap();
        assert_eq!(autotune_nu(&cfg, &grid, &p, &cm).unwrap().0, 1.0);
    }

    #[test]
    fn single_vortex_closed_form() {
        let cm = CouplingMatrix::new(0.0, 2).unwrap();
        let grid = DiskGrid::new(4.0, 30).unwrap();
        let cfg = VortexConfiguration::new(vec![vec![[0.0, 0.0]], vec![]]).unwrap();
        let bg = PlanarBackground::new(&cfg, &grid, &cm, 4.0, 1.0).unwrap();
        let lat = &grid.lattice;
        for k in (0..lat.len()).step_by(17) {
            let p = lat.position(k);
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!((bg.u0[0][k] + (1.0 + 1.0 / r2).ln()).abs() < 1e-12);
            assert!((bg.g[0][k] - 4.0 / (1.0 + r2).powi(2)).abs() < 1e-14);
            assert!((bg.e0[0][k] - bg.u0[0][k].exp()).abs() < 1e-14);
            assert!(bg.u0[0][k] <= 0.0);
        }
        assert!(!bg.coincident);
    }

    #[test]
    fn coincident_vortex_is_regularized() {
        let cm = CouplingMatrix::new(0.0, 2).unwrap();
        let grid = DiskGrid::new(1.0, 9).unwrap(); // odd: origin is a node
        let cfg = VortexConfiguration::new(vec![vec![[0.0, 0.0]], vec![]]).unwrap();
        let bg = PlanarBackground::new(&cfg, &grid, &cm, 4.0, 1.0).unwrap();
        assert!(bg.coincident);
        assert!(bg.u0[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn g_integrates_to_four_pi_n() {
        let cm = CouplingMatrix::new(0.0, 2).unwrap();
        let grid = DiskGrid::new(15.0, 400).unwrap();
        let cfg = VortexConfiguration::new(vec![vec![[0.3, -0.2], [0.3, -0.2]], vec![[1.0, 0.5]]]).unwrap();
        let bg = PlanarBackground::new(&cfg, &grid, &cm, 4.0, 1.0).unwrap();
        for (i, want) in [(0usize, 8.0 * PI), (1, 4.0 * PI)] {
            let masked: Vec<f64> = bg.g[i].iter().zip(&grid.free).map(|(g, &f)| if f { *g } else { 0.0 }).collect();
            let got = integrate(&grid.lattice, &masked);
            assert!((got / want - 1.0).abs() < 0.01, "{got} vs {want}");
        }
    }

    #[test]
    fn multiplicity_is_linear() {
        let cm = CouplingMatrix::new(1.0, 2).unwrap();
        let grid = DiskGrid::new(3.0, 24).unwrap();
        let once = VortexConfiguration::new(vec![vec![[0.2, 0.1]], vec![[-0.5, 0.4]]]).unwrap();
        let twice = VortexConfiguration::new(vec![vec![[0.2, 0.1]; 2], vec![[-0.5, 0.4]; 2]]).unwrap();
        let a = PlanarBackground::new(&once, &grid, &cm, 4.0, 2.0).unwrap();
        let b = PlanarBackground::new(&twice, &grid, &cm, 4.0, 2.0).unwrap();
        for i in 0..2 {
            for k in 0..grid.lattice.len() {
                assert!((2.0 * a.u0[i][k] - b.u0[i][k]).abs() < 1e-12);
                assert!((2.0 * a.g[i][k] - b.g[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn autotune_meets_bound() {
        let cm = CouplingMatrix::new(0.0, 2).unwrap();
        let p = ModelParams::new(2, 0.0, 4.0).unwrap();
        let grid = DiskGrid::new(9.0, 100).unwrap();
        let cfg = VortexConfiguration::new(vec![vec![[0.0, 0.0]], vec![]]).unwrap();
        let (nu, history) = autotune_nu(&cfg, &grid, &p, &cm).unwrap();
        assert_eq!(nu, 2.0);
        assert!(history.windows(2).all(|w| w[1] < w[0]));
        let bg = PlanarBackground::new(&cfg, &grid, &cm, 4.0, nu).unwrap();
        assert!(bg.h_tilde_sup(&grid) <= 0.5);
    }

    #[test]
    fn torus_background_identities() {
        let grid = TorusGrid::new(1.0, 1.0, 64, 64).unwrap();
        let cfg = VortexConfiguration::new(vec![vec![[0.3, 0.4]], vec![]]).unwrap();
        let bg = TorusBackground::new(&cfg, &grid).unwrap();
        assert!(bg.source_residual < 1e-10);
        assert!(bg.u0[0].iter().sum::<f64>().abs() < 1e-9);
        assert!(bg.u0[1].iter().all(|&v| v == 0.0));
        let argmin = (0..grid.lattice.len())
            .min_by(|&a, &b| bg.u0[0][a].total_cmp(&bg.u0[0][b]))
            .unwrap();
        assert_eq!(argmin, bg.vortex_nodes[0][0]);
    }
}
