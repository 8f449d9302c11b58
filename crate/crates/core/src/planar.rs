//! The planar problem on a truncated disk.
//!
//! With `u_i = u0_i + ln r_i + v_i` and `v = Lw`, the unknown `w` minimizes
//! the discrete functional with `c_i = r_i e^{u0_i}`, `beta = L^T r - h` and
//! `kappa = 1`. Nodes outside the open disk hold `w = L^-1(-u0)`, i.e.
//! `u_i = ln r_i` exactly on the boundary.

use nalgebra::DMatrix;

use crate::background::{autotune_nu, PlanarBackground};
use crate::error::{Error, Result};
use crate::functional::{mix_species, species_mixing, DiscreteFunctional};
use crate::grid::{planar_radius, DiskGrid};
use crate::matrix::CouplingMatrix;
use crate::newton::{minimize, NewtonOptions, Objective};
use crate::params::ModelParams;
use crate::solution::{Convergence, Domain, FieldState, Route, Solution};
use crate::spectral::DirichletSpectral;
use crate::vortex::VortexConfiguration;

#[derive(Clone, Debug)]
pub struct PlanarOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting `w` on the free nodes (species-major fields on the full grid);
    /// boundary values are always replaced by the lift. Defaults to zero.
    pub initial: Option<Vec<Vec<f64>>>,
}

impl Default for PlanarOptions {
    fn default() -> Self {
        PlanarOptions {
            tol: 1e-10,
            max_iter: 500,
            initial: None,
        }
    }
}

/// Discrete planar problem: background, coefficients and boundary lift.
pub struct PlanarProblem<'a> {
    pub grid: &'a DiskGrid,
    pub cm: &'a CouplingMatrix,
    pub lambda: f64,
    pub background: PlanarBackground,
    c: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    /// `w` on the fixed nodes (zero on free nodes).
    pub lift: Vec<f64>,
}

impl<'a> PlanarProblem<'a> {
    pub fn new(
        cfg: &VortexConfiguration,
        params: &ModelParams,
        grid: &'a DiskGrid,
        cm: &'a CouplingMatrix,
    ) -> Result<Self> {
        params.validate()?;
        grid.check_covers(cfg)?;
        let m = cm.m();
        let lat = &grid.lattice;
        let n = lat.len();
        let background = PlanarBackground::new(cfg, grid, cm, params.lambda, params.nu)?;
        let c: Vec<Vec<f64>> = (0..m)
            .map(|i| background.e0[i].iter().map(|e| cm.r[i] * e).collect())
            .collect();
        // (L^T r)_i = L_ii r_i + L_{i+1,i} r_{i+1}
        let (ld, ls) = (cm.l_diag(), cm.l_sub());
        let beta: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut ltr = ld[i] * cm.r[i];
                if i + 1 < m {
                    ltr += ls[i + 1] * cm.r[i + 1];
                }
                background.h[i].iter().map(|h| ltr - h).collect()
            })
            .collect();
        let mut lift = vec![0.0; m * n];
        for k in 0..n {
            if grid.free[k] {
                continue;
            }
            for i in 0..m {
                let s: f64 = (0..=i).map(|j| -cm.l_inv[(i, j)] * background.u0[j][k]).sum();
                lift[i * n + k] = s;
            }
        }
        Ok(PlanarProblem {
            grid,
            cm,
            lambda: params.lambda,
            background,
            c,
            beta,
            lift,
        })
    }

    pub fn functional(&self) -> DiscreteFunctional<'_> {
        DiscreteFunctional::new(
            &self.grid.lattice,
            Some(&self.grid.free),
            self.lambda,
            self.cm,
            &self.c,
            &self.beta,
            1.0,
        )
    }

    /// Flat `w` with the given free-node values and the boundary lift.
    pub fn assemble(&self, free_values: Option<&[Vec<f64>]>) -> Vec<f64> {
        let n = self.grid.lattice.len();
        let mut w = self.lift.clone();
        if let Some(init) = free_values {
            for (i, field) in init.iter().enumerate() {
                for k in 0..n {
                    if self.grid.free[k] {
                        w[i * n + k] = field[k];
                    }
                }
            }
        }
        w
    }
}

pub struct PlanarCurvature {
    weights: Vec<f64>,
    q: DMatrix<f64>,
    theta: Vec<f64>,
}

struct PlanarObjective<'p, 'a> {
    problem: &'p PlanarProblem<'a>,
    f: DiscreteFunctional<'p>,
    precond: DirichletSpectral,
}

impl Objective for PlanarObjective<'_, '_> {
    type Curvature = PlanarCurvature;

    fn dim(&self) -> usize {
        self.f.m() * self.f.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.f.value(x)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        self.f.gradient(x, g)
    }

    fn curvature(&self, x: &[f64]) -> Result<PlanarCurvature> {
        let weights = self.f.weights(x)?;
        let wbar = self.f.mean_weights(&weights);
        let (q, theta) = species_mixing(&self.f.l_diag, &self.f.l_sub, &wbar);
        Ok(PlanarCurvature { weights, q, theta })
    }

    fn hessian_apply(&self, c: &PlanarCurvature, d: &[f64], out: &mut [f64]) {
        self.f.hessian_apply(&c.weights, d, out);
    }

    fn precondition(&self, c: &PlanarCurvature, r: &[f64], out: &mut [f64]) {
        let n = self.f.len();
        let m = self.f.m();
        let free = &self.problem.grid.free;
        let mut y = vec![0.0; m * n];
        mix_species(&c.q, r, n, true, &mut y);
        let mut z = vec![0.0; m * n];
        for qi in 0..m {
            let slot = qi * n..(qi + 1) * n;
            for (k, v) in y[slot.clone()].iter_mut().enumerate() {
                if !free[k] {
                    *v = 0.0;
                }
            }
            self.precond
                .solve(&y[slot.clone()], 1.0 / self.f.lambda, c.theta[qi], &mut z[slot]);
        }
        mix_species(&c.q, &z, n, false, out);
        for i in 0..m {
            for k in 0..n {
                if !free[k] {
                    out[i * n + k] = 0.0;
                }
            }
        }
    }
}

/// Chooses `nu` (unless given) and a resolving disk grid. `radius` and `n`
/// override the automatic truncation radius and node count.
pub fn planar_setup(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    cm: &CouplingMatrix,
    nu: Option<f64>,
    radius: Option<f64>,
    n: Option<usize>,
) -> Result<(ModelParams, DiskGrid)> {
    cfg.check_m(cm.m())?;
    let make_grid = |p: &ModelParams| -> Result<DiskGrid> {
        let rho = radius.unwrap_or_else(|| planar_radius(p, cm, cfg));
        match n {
            Some(n) => DiskGrid::new(rho, n),
            None => DiskGrid::resolving(rho, p.lambda, cm.lambda0),
        }
    };
    let mut p = params.clone();
    match nu {
        Some(value) => p = p.with_nu(value)?,
        None => {
            p = p.with_nu(1.0)?;
            let provisional = make_grid(&p)?;
            let (tuned, _) = autotune_nu(cfg, &provisional, &p, cm)?;
            p = p.with_nu(tuned)?;
        }
    }
    let mut grid = make_grid(&p)?;
    if nu.is_none() {
        let (tuned, _) = autotune_nu(cfg, &grid, &p, cm)?;
        if tuned != p.nu {
            p = p.with_nu(tuned)?;
            grid = make_grid(&p)?;
        }
    }
    grid.check_covers(cfg)?;
    Ok((p, grid))
}

/// Minimizes the planar functional on `grid` with `params.nu` as the
/// background sharpness.
pub fn solve_planar(
    cfg: &VortexConfiguration,
    params: &ModelParams,
    grid: &DiskGrid,
    opts: &PlanarOptions,
) -> Result<Solution> {
    let cm = CouplingMatrix::new(params.a, params.m)?;
    cfg.check_m(params.m)?;
    let problem = PlanarProblem::new(cfg, params, grid, &cm)?;
    let objective = PlanarObjective {
        problem: &problem,
        f: problem.functional(),
        precond: DirichletSpectral::new(&grid.lattice),
    };
    let x0 = problem.assemble(opts.initial.as_deref());
    let newton = NewtonOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        ..NewtonOptions::default()
    };
    let out = minimize(&objective, x0, &newton, |_| {})?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
            residual_history: out.history,
            mean_trajectory: Vec::new(),
        });
    }
    let lat = &grid.lattice;
    let n = lat.len();
    let m = params.m;
    let f = &objective.f;
    let v_flat = f.transform(&out.x);
    let bg = &problem.background;
    let mut state = FieldState {
        w: Vec::with_capacity(m),
        v: Vec::with_capacity(m),
        u: Vec::with_capacity(m),
        eu: Vec::with_capacity(m),
        residual_norm: out.residual,
    };
    for i in 0..m {
        let v = v_flat[i * n..(i + 1) * n].to_vec();
        let ln_r = cm.r[i].ln();
        state.u.push((0..n).map(|k| bg.u0[i][k] + ln_r + v[k]).collect());
        state.eu.push((0..n).map(|k| bg.e0[i][k] * cm.r[i] * v[k].exp()).collect());
        state.w.push(out.x[i * n..(i + 1) * n].to_vec());
        state.v.push(v);
    }
    Ok(Solution {
        domain: Domain::Disk {
            radius: grid.radius,
        },
        route: Route::Planar,
        lattice: lat.clone(),
        active: grid.free.clone(),
        params: params.clone(),
        counts: cfg.counts(),
        vortices: cfg.points.clone(),
        regular_source: bg.g.iter().map(|g| g.iter().map(|v| -v).collect()).collect(),
        state,
        convergence: Convergence {
            converged: true,
            iterations: out.iterations,
            residual: out.residual,
            history: out.history,
            fallback_steps: out.fallback_steps,
            functional_value: out.value * lat.cell_area(),
        },
        nu: Some(params.nu),
        h_tilde_sup: Some(bg.h_tilde_sup(grid)),
        coincident: bg.coincident,
        torus: None,
    })
}

/// Least-squares exponential rate of `sum_i (u_i - ln r_i)^2` over the annulus
/// `0.5 rho <= |x| <= 0.9 rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    /// Fitted `sigma` in `sum_i (u_i - ln r_i)^2 ~ C e^{-sigma |x|}`; `None` when
    /// the deviation vanishes identically (no vortices).
    pub sigma_fit: Option<f64>,
    /// `sqrt(lambda lambda0)`
    pub reference: f64,
    pub passes: bool,
    pub points: usize,
}

const DECAY_FLOOR: f64 = 1e-11;

pub fn decay_fit(sol: &Solution, cm: &CouplingMatrix) -> Result<DecayFit> {
    let Domain::Disk { radius } = sol.domain else {
        return Err(Error::Unsupported("decay fit needs a planar solution".into()));
    };
    let reference = (sol.params.lambda * cm.lambda0).sqrt();
    if sol.counts.iter().all(|&c| c == 0) {
        return Ok(DecayFit {
            sigma_fit: None,
            reference,
            passes: true,
            points: 0,
        });
    }
    let lat = &sol.lattice;
    let m = sol.m();
    let (lo, hi) = (0.5 * radius, 0.9 * radius);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..lat.len() {
        if !sol.active[k] {
            continue;
        }
        let p = lat.position(k);
        let dist = p[0].hypot(p[1]);
        if dist < lo || dist > hi {
            continue;
        }
        let s: f64 = (0..m)
            .map(|i| (sol.state.u[i][k] - cm.r[i].ln()).powi(2))
            .sum();
        if s.sqrt() > DECAY_FLOOR {
            xs.push(dist);
            ys.push(s.ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::FitDegenerate(format!(
            "only {} annulus points exceed the {DECAY_FLOOR:e} floor; use a smaller radius",
            xs.len()
        )));
    }
    let count = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / count;
    let my = ys.iter().sum::<f64>() / count;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitDegenerate("annulus points share one radius".into()));
    }
    let sigma = -sxy / sxx;
    Ok(DecayFit {
        sigma_fit: Some(sigma),
        reference,
        passes: sigma >= 0.85 * reference,
        points: xs.len(),
    })
}
