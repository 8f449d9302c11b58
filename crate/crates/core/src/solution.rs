use crate::grid::Lattice;
use crate::matrix::ExistenceReport;
use crate::params::ModelParams;

/// Grid fields of a solve, one `Vec` per species.
///
/// `v = Lw` pointwise; `u_i = u0_i + ln r_i + v_i` on the plane and
/// `u_i = u0_i + v_i` on the torus. `eu` holds `e^{u_i}` computed from the
/// stored `e^{u0}` so it stays finite at vortex points.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub w: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub eu: Vec<Vec<f64>>,
    pub residual_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Disk { radius: f64 },
    Torus { l1: f64, l2: f64 },
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Disk { .. } => "disk",
            Domain::Torus { .. } => "torus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Planar,
    Direct,
    Constrained,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Planar => "planar",
            Route::Direct => "direct",
            Route::Constrained => "constrained",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm of the discrete residual at the returned state.
    pub residual: f64,
    pub history: Vec<f64>,
    pub fallback_steps: usize,
    /// The discrete functional (with cell-area weighting) at the returned state.
    pub functional_value: f64,
}

/// Periodic-only data: natural-constraint targets and how well they hold.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSummary {
    pub existence: ExistenceReport,
    pub k: Vec<f64>,
    /// `|integral e^{u_i} - K_i| / K_i`
    pub constraint_residuals: Vec<f64>,
    pub near_threshold: bool,
    /// Grid mean of `v_i` after every accepted step.
    pub mean_trajectory: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub domain: Domain,
    pub route: Route,
    pub lattice: Lattice,
    /// Nodes that are unknowns of the solve (all of them on the torus).
    pub active: Vec<bool>,
    pub params: ModelParams,
    pub counts: Vec<usize>,
    pub vortices: Vec<Vec<[f64; 2]>>,
    pub state: FieldState,
    /// Regular part of `Delta u0_i` (the delta sources removed): `-g_i` on the
    /// plane, `-4 pi n_i / |Omega|` on the torus.
    pub regular_source: Vec<Vec<f64>>,
    pub convergence: Convergence,
    pub nu: Option<f64>,
    /// `max_i sup |h~_i|` over the grid at the background `nu` (planar only).
    pub h_tilde_sup: Option<f64>,
    pub coincident: bool,
    pub torus: Option<TorusSummary>,
}

impl Solution {
    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn area_of_domain(&self) -> f64 {
        match self.domain {
            Domain::Disk { radius } => std::f64::consts::PI * radius * radius,
            Domain::Torus { l1, l2 } => l1 * l2,
        }
    }
}
