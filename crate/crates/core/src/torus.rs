//! The doubly periodic problem on a rectangular flat torus.
//!
//! With `u_i = u0_i + v_i` and `v = Lw`, the direct route minimizes the
//! discrete functional with `c_i = e^{u0_i}`, `beta = L^-1 1 - (4 pi / (lambda |Omega|)) L^-1 n`
//! and `kappa = 0`. The constrained route minimizes over mean-zero `w` and
//! recovers the means from the natural constraints `integral e^{u_i} = K_i`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::background::{integrate, TorusBackground};
use crate::error::{Error, Result};
use crate::functional::{mix_species, species_mixing, DiscreteFunctional};
use crate::grid::TorusGrid;
use crate::matrix::{CouplingMatrix, ExistenceReport};
use crate::newton::{minimize, sup_norm, NewtonOptions, Objective};
use crate::params::ModelParams;
use crate::solution::{Convergence, Domain, FieldState, Route, Solution, TorusSummary};
use crate::spectral::PeriodicSpectral;
use crate::vortex::VortexConfiguration;

/// Iteration cap applied when some `K_i / (|Omega| r_i)` falls below
/// [`NEAR_THRESHOLD_RATIO`].
pub const NEAR_THRESHOLD_CAP: usize = 2000;
pub const NEAR_THRESHOLD_RATIO: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct TorusOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TorusOptions {
    fn default() -> Self {
        TorusOptions {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

struct Setup {
    cm: CouplingMatrix,
    existence: ExistenceReport,
    background: TorusBackground,
    spectral: PeriodicSpectral,
    beta: Vec<Vec<f64>>,
    near_threshold: bool,
    max_iter: usize,
}

fn setup(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    opts: &TorusOptions,
) -> Result<Setup> {
    params.validate()?;
    cfg.check_m(params.m)?;
    let cm = CouplingMatrix::new(params.a, params.m)?;
    let area = grid.area();
    let counts = cfg.counts();
    let existence = cm.check_torus_existence(params.lambda, &counts, area)?;
    if !existence.all_hold() {
        return Err(Error::Nonexistence(existence));
    }
    let spectral = PeriodicSpectral::new(&grid.lattice);
    let background = TorusBackground::with_solver(cfg, grid, &spectral)?;
    let m = params.m;
    let n = grid.lattice.len();
    // beta = L^-1 t with t = 1 - 4 pi n / (lambda |Omega|)
    let t: Vec<f64> = counts
        .iter()
        .map(|&c| 1.0 - 4.0 * PI * c as f64 / (params.lambda * area))
        .collect();
    let beta: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let b: f64 = (0..=i).map(|j| cm.l_inv[(i, j)] * t[j]).sum();
            vec![b; n]
        })
        .collect();
    let near_threshold = (0..m).any(|i| existence.k[i] / (area * cm.r[i]) < NEAR_THRESHOLD_RATIO);
    let max_iter = if near_threshold {
        opts.max_iter.max(NEAR_THRESHOLD_CAP)
    } else {
        opts.max_iter
    };
    Ok(Setup {
        cm,
        existence,
        background,
        spectral,
        beta,
        near_threshold,
        max_iter,
    })
}

pub struct TorusCurvature {
    weights: Vec<f64>,
    q: DMatrix<f64>,
    theta: Vec<f64>,
}

struct DirectObjective<'a> {
    f: DiscreteFunctional<'a>,
    spectral: &'a PeriodicSpectral,
}

fn spectral_precondition(
    spectral: &PeriodicSpectral,
    lambda: f64,
    q: &DMatrix<f64>,
    theta: &[f64],
    drop_mean: bool,
    n: usize,
    r: &[f64],
    out: &mut [f64],
) {
    let m = q.nrows();
    let mut y = vec![0.0; m * n];
    mix_species(q, r, n, true, &mut y);
    let mut z = vec![0.0; m * n];
    for qi in 0..m {
        let slot = qi * n..(qi + 1) * n;
        spectral.solve(&y[slot.clone()], 1.0 / lambda, theta[qi], drop_mean, &mut z[slot]);
    }
    mix_species(q, &z, n, false, out);
}

impl Objective for DirectObjective<'_> {
    type Curvature = TorusCurvature;

    fn dim(&self) -> usize {
        self.f.m() * self.f.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.f.value(x)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        self.f.gradient(x, g)
    }

    fn curvature(&self, x: &[f64]) -> Result<TorusCurvature> {
        let weights = self.f.weights(x)?;
        let wbar = self.f.mean_weights(&weights);
        let (q, theta) = species_mixing(&self.f.l_diag, &self.f.l_sub, &wbar);
        Ok(TorusCurvature { weights, q, theta })
    }

    fn hessian_apply(&self, c: &TorusCurvature, d: &[f64], out: &mut [f64]) {
        self.f.hessian_apply(&c.weights, d, out);
    }

    fn precondition(&self, c: &TorusCurvature, r: &[f64], out: &mut [f64]) {
        spectral_precondition(self.spectral, self.f.lambda, &c.q, &c.theta, false, self.f.len(), r, out);
    }
}

fn project_mean(x: &mut [f64], n: usize) {
    for field in x.chunks_exact_mut(n) {
        let mean = field.iter().sum::<f64>() / n as f64;
        field.iter_mut().for_each(|v| *v -= mean);
    }
}

/// `J(w) = 1/(2 lambda) sum_edges |dw/h|^2 + sum_i (K_i / A) ln(A sum_y e^{u0_i + (Lw)_i})`
/// over mean-zero `w`, per unit cell area `A`.
struct ConstrainedObjective<'a> {
    f: DiscreteFunctional<'a>,
    spectral: &'a PeriodicSpectral,
    k: Vec<f64>,
}

pub struct ConstrainedCurvature {
    // U_i(y) = (K_i / A) p_i(y), the current e^{u_i}
    u: Vec<f64>,
    // p_i(y) = e^{u_i(y)} / sum_z e^{u_i(z)}
    p: Vec<f64>,
    q: DMatrix<f64>,
    theta: Vec<f64>,
}

impl ConstrainedObjective<'_> {
    /// Returns `(ln(A S_i), p_i)` for every species, computed with a max shift.
    fn distributions(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.f.len();
        let m = self.f.m();
        let v = self.f.transform(x);
        let area = self.f.lat.cell_area();
        let mut log_mass = vec![0.0; m];
        let mut p = vec![0.0; m * n];
        for i in 0..m {
            let e0 = &self.f.c[i];
            let vi = &v[i * n..(i + 1) * n];
            let shift = vi.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let pi = &mut p[i * n..(i + 1) * n];
            let mut s = 0.0;
            for k in 0..n {
                pi[k] = e0[k] * (vi[k] - shift).exp();
                s += pi[k];
            }
            pi.iter_mut().for_each(|x| *x /= s);
            log_mass[i] = shift + (area * s).ln();
        }
        (log_mass, p)
    }

    fn mean_values(&self, x: &[f64]) -> Vec<f64> {
        let (log_mass, _) = self.distributions(x);
        (0..self.f.m()).map(|i| self.k[i].ln() - log_mass[i]).collect()
    }
}

impl Objective for ConstrainedObjective<'_> {
    type Curvature = ConstrainedCurvature;

    fn dim(&self) -> usize {
        self.f.m() * self.f.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let n = self.f.len();
        let area = self.f.lat.cell_area();
        let mut dirichlet = 0.0;
        for i in 0..self.f.m() {
            dirichlet += self.f.lat.dirichlet_energy(&x[i * n..(i + 1) * n], None);
        }
        let (log_mass, _) = self.distributions(x);
        let entropy: f64 = (0..self.f.m()).map(|i| self.k[i] / area * log_mass[i]).sum();
        Ok(dirichlet / (2.0 * self.f.lambda) + entropy)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let n = self.f.len();
        let m = self.f.m();
        let area = self.f.lat.cell_area();
        let (_, p) = self.distributions(x);
        let mut u = p;
        for i in 0..m {
            let scale = self.k[i] / area;
            u[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= scale);
        }
        lt_apply(&self.f, &u, g);
        let mut lap = vec![0.0; n];
        for i in 0..m {
            self.f.lat.neg_laplacian(&x[i * n..(i + 1) * n], None, &mut lap);
            for k in 0..n {
                g[i * n + k] += lap[k] / self.f.lambda;
            }
        }
        project_mean(g, n);
        Ok(())
    }

    fn curvature(&self, x: &[f64]) -> Result<ConstrainedCurvature> {
        let n = self.f.len();
        let m = self.f.m();
        let area = self.f.lat.cell_area();
        let (_, p) = self.distributions(x);
        let mut u = p.clone();
        for i in 0..m {
            let scale = self.k[i] / area;
            u[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= scale);
        }
        let wbar: Vec<f64> = (0..m).map(|i| self.k[i] / (area * n as f64)).collect();
        let (q, theta) = species_mixing(&self.f.l_diag, &self.f.l_sub, &wbar);
        Ok(ConstrainedCurvature { u, p, q, theta })
    }

    fn hessian_apply(&self, c: &ConstrainedCurvature, d: &[f64], out: &mut [f64]) {
        let n = self.f.len();
        let m = self.f.m();
        let mut y = self.f.transform(d);
        for i in 0..m {
            let slot = i * n..(i + 1) * n;
            let avg: f64 = c.p[slot.clone()].iter().zip(&y[slot.clone()]).map(|(p, y)| p * y).sum();
            for k in slot {
                y[k] = c.u[k] * (y[k] - avg);
            }
        }
        lt_apply(&self.f, &y, out);
        let mut lap = vec![0.0; n];
        for i in 0..m {
            self.f.lat.neg_laplacian(&d[i * n..(i + 1) * n], None, &mut lap);
            for k in 0..n {
                out[i * n + k] += lap[k] / self.f.lambda;
            }
        }
        project_mean(out, n);
    }

    fn precondition(&self, c: &ConstrainedCurvature, r: &[f64], out: &mut [f64]) {
        spectral_precondition(self.spectral, self.f.lambda, &c.q, &c.theta, true, self.f.len(), r, out);
        project_mean(out, self.f.len());
    }
}

fn lt_apply(f: &DiscreteFunctional<'_>, y: &[f64], out: &mut [f64]) {
    let n = f.len();
    let m = f.m();
    for i in 0..m {
        for k in 0..n {
            let mut s = f.l_diag[i] * y[i * n + k];
            if i + 1 < m {
                s += f.l_sub[i + 1] * y[(i + 1) * n + k];
            }
            out[i * n + k] = s;
        }
    }
}

fn species_means(x: &[f64], n: usize) -> Vec<f64> {
    x.chunks_exact(n).map(|f| f.iter().sum::<f64>() / n as f64).collect()
}

fn finish(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    s: &Setup,
    f: &DiscreteFunctional<'_>,
    w: Vec<f64>,
    route: Route,
    iterations: usize,
    history: Vec<f64>,
    fallback_steps: usize,
    mean_trajectory: Vec<Vec<f64>>,
) -> Result<Solution> {
    let lat = &grid.lattice;
    let n = lat.len();
    let m = params.m;
    let mut g = vec![0.0; m * n];
    f.gradient(&w, &mut g)?;
    let residual = sup_norm(&g);
    let value = f.value(&w)? * lat.cell_area();
    let v_flat = f.transform(&w);
    let bg = &s.background;
    let mut state = FieldState {
        w: Vec::with_capacity(m),
        v: Vec::with_capacity(m),
        u: Vec::with_capacity(m),
        eu: Vec::with_capacity(m),
        residual_norm: residual,
    };
    let mut constraint_residuals = Vec::with_capacity(m);
    for i in 0..m {
        let v = v_flat[i * n..(i + 1) * n].to_vec();
        let eu: Vec<f64> = (0..n).map(|k| bg.e0[i][k] * v[k].exp()).collect();
        let mass = integrate(lat, &eu);
        constraint_residuals.push((mass - s.existence.k[i]).abs() / s.existence.k[i]);
        state.u.push((0..n).map(|k| bg.u0[i][k] + v[k]).collect());
        state.eu.push(eu);
        state.w.push(w[i * n..(i + 1) * n].to_vec());
        state.v.push(v);
    }
    let area = grid.area();
    let counts = cfg.counts();
    Ok(Solution {
        domain: Domain::Torus {
            l1: grid.l1,
            l2: grid.l2,
        },
        route,
        lattice: lat.clone(),
        active: vec![true; n],
        params: params.clone(),
        regular_source: counts.iter().map(|&c| vec![-4.0 * PI * c as f64 / area; n]).collect(),
        counts,
        vortices: cfg.points.clone(),
        state,
        convergence: Convergence {
            converged: true,
            iterations,
            residual,
            history,
            fallback_steps,
            functional_value: value,
        },
        nu: None,
        h_tilde_sup: None,
        coincident: false,
        torus: Some(TorusSummary {
            existence: s.existence.clone(),
            k: s.existence.k.clone(),
            constraint_residuals,
            near_threshold: s.near_threshold,
            mean_trajectory,
        }),
    })
}

/// Direct minimization over all periodic `w`. Refuses with
/// [`Error::Nonexistence`] before iterating when the existence conditions fail.
pub fn solve_torus(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    opts: &TorusOptions,
) -> Result<Solution> {
    let s = setup(cfg, params, grid, opts)?;
    let lat = &grid.lattice;
    let n = lat.len();
    let m = params.m;
    let f = DiscreteFunctional::new(lat, None, params.lambda, &s.cm, &s.background.e0, &s.beta, 0.0);
    // constant start satisfying the natural constraints: v_i = ln(K_i / integral e^{u0_i})
    let v0: Vec<f64> = (0..m)
        .map(|i| (s.existence.k[i] / integrate(lat, &s.background.e0[i])).ln())
        .collect();
    let mut x0 = vec![0.0; m * n];
    for i in 0..m {
        let w: f64 = (0..=i).map(|j| s.cm.l_inv[(i, j)] * v0[j]).sum();
        x0[i * n..(i + 1) * n].iter_mut().for_each(|x| *x = w);
    }
    let objective = DirectObjective {
        f,
        spectral: &s.spectral,
    };
    let newton = NewtonOptions {
        tol: opts.tol,
        max_iter: s.max_iter,
        ..NewtonOptions::default()
    };
    let mut trajectory = vec![species_means(&objective.f.transform(&x0), n)];
    let out = minimize(&objective, x0, &newton, |x| {
        trajectory.push(species_means(&objective.f.transform(x), n));
    })?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
            residual_history: out.history,
            mean_trajectory: trajectory,
        });
    }
    finish(
        cfg,
        params,
        grid,
        &s,
        &objective.f,
        out.x,
        Route::Direct,
        out.iterations,
        out.history,
        out.fallback_steps,
        trajectory,
    )
}

/// Minimization over mean-zero `w` with the means eliminated through the
/// natural constraints; the constraints hold by construction at every iterate.
pub fn constrained_solve_torus(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    opts: &TorusOptions,
) -> Result<Solution> {
    let s = setup(cfg, params, grid, opts)?;
    let lat = &grid.lattice;
    let n = lat.len();
    let m = params.m;
    let objective = ConstrainedObjective {
        f: DiscreteFunctional::new(lat, None, params.lambda, &s.cm, &s.background.e0, &s.beta, 0.0),
        spectral: &s.spectral,
        k: s.existence.k.clone(),
    };
    let x0 = vec![0.0; m * n];
    let newton = NewtonOptions {
        tol: opts.tol,
        max_iter: s.max_iter,
        ..NewtonOptions::default()
    };
    let mut trajectory = vec![objective.mean_values(&x0)];
    let out = minimize(&objective, x0, &newton, |x| {
        trajectory.push(objective.mean_values(x));
    })?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
            residual_history: out.history,
            mean_trajectory: trajectory,
        });
    }
    // w = w_dot + L^-1 vbar
    let vbar = objective.mean_values(&out.x);
    let mut w = out.x;
    for i in 0..m {
        let shift: f64 = (0..=i).map(|j| s.cm.l_inv[(i, j)] * vbar[j]).sum();
        w[i * n..(i + 1) * n].iter_mut().for_each(|x| *x += shift);
    }
    finish(
        cfg,
        params,
        grid,
        &s,
        &objective.f,
        w,
        Route::Constrained,
        out.iterations,
        out.history,
        out.fallback_steps,
        trajectory,
    )
}

/// Solve observables recorded for a feasible scan row.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSolve {
    pub iterations: usize,
    pub residual: f64,
    pub constraint_residuals: Vec<f64>,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub functional_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub area: f64,
    pub holds: bool,
    /// 0-based indices of violated conditions.
    pub failing: Vec<usize>,
    pub k: Vec<f64>,
    pub solve: Option<ScanSolve>,
    pub error: Option<String>,
}

fn scan_row(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    opts: &TorusOptions,
) -> ScanRow {
    let mut row = ScanRow {
        lambda: params.lambda,
        area: grid.area(),
        holds: false,
        failing: Vec::new(),
        k: Vec::new(),
        solve: None,
        error: None,
    };
    let verdict = CouplingMatrix::new(params.a, params.m)
        .and_then(|cm| cm.check_torus_existence(params.lambda, &cfg.counts(), grid.area()));
    match verdict {
        Ok(rep) => {
            row.holds = rep.all_hold();
            row.failing = rep.failing_indices();
            row.k = rep.k;
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    if !row.holds {
        return row;
    }
    match solve_torus(cfg, params, grid, opts) {
        Ok(sol) => {
            let fold = |f: fn(f64, f64) -> f64, init: f64| -> Vec<f64> {
                sol.state.u.iter().map(|u| u.iter().copied().fold(init, f)).collect()
            };
            row.solve = Some(ScanSolve {
                iterations: sol.convergence.iterations,
                residual: sol.convergence.residual,
                constraint_residuals: sol.torus.as_ref().map(|t| t.constraint_residuals.clone()).unwrap_or_default(),
                u_min: fold(f64::min, f64::INFINITY),
                u_max: fold(f64::max, f64::NEG_INFINITY),
                functional_value: sol.convergence.functional_value,
            });
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// One row per `lambda`, in the given order. Infeasible rows carry no solve data.
pub fn threshold_scan(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    lambdas: &[f64],
    opts: &TorusOptions,
) -> Result<Vec<ScanRow>> {
    let items = lambdas
        .iter()
        .map(|&l| params.clone().with_lambda(l))
        .collect::<Result<Vec<_>>>()?;
    Ok(items.par_iter().map(|p| scan_row(cfg, p, grid, opts)).collect())
}

/// One row per cell area; the cell and the vortex positions are scaled
/// uniformly about the origin and the node counts are kept.
pub fn area_scan(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &TorusGrid,
    areas: &[f64],
    opts: &TorusOptions,
) -> Result<Vec<ScanRow>> {
    let items = areas
        .iter()
        .map(|&a| {
            if !(a > 0.0) {
                return Err(Error::Config(format!("scan area must be > 0, got {a}")));
            }
            let s = (a / grid.area()).sqrt();
            let g = TorusGrid::new(grid.l1 * s, grid.l2 * s, grid.lattice.nx, grid.lattice.ny)?;
            Ok((cfg.scaled(s), g))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(items
        .par_iter()
        .map(|(c, g)| scan_row(c, params, g, opts))
        .collect())
}
