//! Damped inexact Newton with matrix-free preconditioned CG, Armijo
//! backtracking, and a nonlinear-CG fallback when a Newton step cannot be
//! accepted.

use crate::error::{Error, Result};

/// A smooth convex objective on a flat vector. Implementations keep any
/// fixed coordinates at zero in gradients, Hessian products and
/// preconditioned vectors.
pub trait Objective {
    type Curvature;

    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()>;
    fn curvature(&self, x: &[f64]) -> Result<Self::Curvature>;
    fn hessian_apply(&self, c: &Self::Curvature, d: &[f64], out: &mut [f64]);
    fn precondition(&self, c: &Self::Curvature, r: &[f64], out: &mut [f64]);
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    /// Stop when the sup-norm of the gradient is at most this.
    pub tol: f64,
    pub max_iter: usize,
    pub max_cg: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 500,
            max_cg: 400,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Gradient sup-norm before the first step and after every accepted step.
    pub history: Vec<f64>,
    pub converged: bool,
    pub fallback_steps: usize,
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg<O: Objective>(
    obj: &O,
    curv: &O::Curvature,
    g: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = g.len();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut z = vec![0.0; n];
    obj.precondition(curv, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = rel_tol * dot(g, g).sqrt();
    let mut hp = vec![0.0; n];
    for it in 0..max_iter {
        obj.hessian_apply(curv, &p, &mut hp);
        let php = dot(&p, &hp);
        if !(php > 0.0) || !(rz > 0.0) {
            if it == 0 {
                return z;
            }
            break;
        }
        let alpha = rz / php;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * hp[k];
        }
        if dot(&r, &r).sqrt() <= target {
            break;
        }
        obj.precondition(curv, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}

struct Trial {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    gnorm: f64,
}

fn line_search<O: Objective>(
    obj: &O,
    x: &[f64],
    f: f64,
    gnorm: f64,
    d: &[f64],
    slope: f64,
    opts: &NewtonOptions,
) -> Result<Option<Trial>> {
    let n = x.len();
    let mut t = 1.0;
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];
    let slack = 1e-12 * (1.0 + f.abs());
    for _ in 0..=opts.max_backtracks {
        for k in 0..n {
            xt[k] = x[k] + t * d[k];
        }
        match obj.value(&xt) {
            Ok(ft) if ft.is_finite() => {
                let armijo = ft <= f + opts.armijo * t * slope;
                if armijo || ft <= f + slack {
                    obj.gradient(&xt, &mut gt)?;
                    let gn = sup_norm(&gt);
                    // below roundoff in f, accept only on gradient progress
                    if armijo || gn < gnorm {
                        return Ok(Some(Trial {
                            x: xt,
                            f: ft,
                            g: gt,
                            gnorm: gn,
                        }));
                    }
                }
            }
            Ok(_) | Err(Error::Diverged { .. }) => {}
            Err(e) => return Err(e),
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Minimizes `obj` from `x0`. `observer` sees every accepted iterate.
pub fn minimize<O: Objective>(
    obj: &O,
    x0: Vec<f64>,
    opts: &NewtonOptions,
    mut observer: impl FnMut(&[f64]),
) -> Result<NewtonOutcome> {
    let n = obj.dim();
    if x0.len() != n {
        return Err(Error::InvalidDimension(format!(
            "initial guess has length {}, expected {n}",
            x0.len()
        )));
    }
    let mut x = x0;
    let mut f = obj.value(&x)?;
    let mut g = vec![0.0; n];
    obj.gradient(&x, &mut g)?;
    let mut gnorm = sup_norm(&g);
    let mut history = vec![gnorm];
    let mut iterations = 0;
    let mut fallback_steps = 0;
    // nonlinear CG memory, cleared after every Newton step
    let mut cg_prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;

    while gnorm > opts.tol && iterations < opts.max_iter {
        let curv = obj.curvature(&x)?;
        let eta = gnorm.clamp(1e-10, 0.1);
        let mut d = pcg(obj, &curv, &g, eta, opts.max_cg);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            obj.precondition(&curv, &g, &mut d);
            d.iter_mut().for_each(|v| *v = -*v);
            slope = dot(&g, &d);
        }
        let mut trial = if slope < 0.0 {
            line_search(obj, &x, f, gnorm, &d, slope, opts)?
        } else {
            None
        };
        if trial.is_some() {
            cg_prev = None;
        } else {
            // Polak-Ribiere+ on the preconditioned gradient
            let mut pg = vec![0.0; n];
            obj.precondition(&curv, &g, &mut pg);
            let mut dir: Vec<f64> = pg.iter().map(|v| -v).collect();
            if let Some((g_old, pg_old, d_old)) = &cg_prev {
                let num: f64 = pg.iter().zip(g.iter().zip(g_old)).map(|(p, (a, b))| p * (a - b)).sum();
                let beta = (num / dot(g_old, pg_old)).max(0.0);
                if beta.is_finite() {
                    for k in 0..n {
                        dir[k] += beta * d_old[k];
                    }
                }
            }
            let mut s = dot(&g, &dir);
            if !(s < 0.0) {
                dir = pg.iter().map(|v| -v).collect();
                s = dot(&g, &dir);
            }
            if s < 0.0 {
                trial = line_search(obj, &x, f, gnorm, &dir, s, opts)?;
            }
            if trial.is_some() {
                fallback_steps += 1;
                cg_prev = Some((g.clone(), pg, dir));
            }
        }
        let Some(t) = trial else {
            break;
        };
        x = t.x;
        f = t.f;
        g = t.g;
        gnorm = t.gnorm;
        iterations += 1;
        history.push(gnorm);
        observer(&x);
    }

    Ok(NewtonOutcome {
        converged: gnorm <= opts.tol,
        x,
        value: f,
        iterations,
        residual: gnorm,
        history,
        fallback_steps,
    })
}
