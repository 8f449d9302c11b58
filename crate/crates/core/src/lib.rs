//! Solvers for the reduced ABJM BPS multi-vortex system
//!
//! ```text
//! Delta u_i = lambda (sum_j R_ij e^{u_j} - 1) + 4 pi sum_s delta_{p_is},   i = 1..m
//! ```
//!
//! on a truncated disk (approximating the plane) and on a rectangular flat
//! torus, with `R = R(a, m)` tridiagonal. Both problems are solved as
//! minimizations of a strictly convex discrete functional after the change
//! of variables `v = Lw`, `R = L L^T`.

pub mod background;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod functional;
pub mod grid;
pub mod matrix;
pub mod newton;
pub mod output;
pub mod params;
pub mod planar;
pub mod solution;
pub mod spectral;
pub mod torus;
pub mod tridiag;
pub mod vortex;

pub use background::{autotune_nu, PlanarBackground, TorusBackground};
pub use config::{DomainSpec, RunConfig};
pub use diagnostics::{
    build_report, energy_a0, magnetic_field, magnetic_field_direct, quantized_integrals, total_flux, Flux,
    QuantizedIntegral, SolveReport,
};
pub use error::{Error, Result};
pub use grid::{DiskGrid, Lattice, TorusGrid};
pub use matrix::{check_torus_existence, CouplingMatrix, ExistenceCondition, ExistenceReport};
pub use output::write_outputs;
pub use params::{ModelParams, Sign};
pub use planar::{decay_fit, planar_setup, solve_planar, DecayFit, PlanarOptions, PlanarProblem};
pub use solution::{Convergence, Domain, FieldState, Route, Solution, TorusSummary};
pub use torus::{area_scan, constrained_solve_torus, solve_torus, threshold_scan, ScanRow, TorusOptions};
pub use vortex::VortexConfiguration;
