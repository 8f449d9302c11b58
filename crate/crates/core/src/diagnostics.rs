//! Observables of converged states: quantized integrals, the diagonal
//! magnetic field, total flux and the `a = 0` energy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::CouplingMatrix;
use crate::params::ModelParams;
use crate::planar::{decay_fit, DecayFit};
use crate::solution::{Domain, Solution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizedIntegral {
    /// `integral (sum_j R_ij e^{u_j} - 1)` by cell quadrature over the unknown nodes.
    pub computed: f64,
    /// `-4 pi n_i / lambda`
    pub target: f64,
}

impl QuantizedIntegral {
    /// Relative error against the target, or the absolute error when the target is zero.
    pub fn error(&self) -> f64 {
        let diff = (self.computed - self.target).abs();
        if self.target == 0.0 {
            diff
        } else {
            diff / self.target.abs()
        }
    }
}

pub fn quantized_integrals(sol: &Solution, cm: &CouplingMatrix) -> Vec<QuantizedIntegral> {
    let m = sol.m();
    let area = sol.lattice.cell_area();
    (0..m)
        .map(|i| {
            let mut sum = 0.0;
            for k in 0..sol.lattice.len() {
                if !sol.active[k] {
                    continue;
                }
                let mut s = -1.0;
                for j in i.saturating_sub(1)..(i + 2).min(m) {
                    s += cm.r_mat[(i, j)] * sol.state.eu[j][k];
                }
                sum += s;
            }
            QuantizedIntegral {
                computed: area * sum,
                target: if sol.counts[i] == 0 { 0.0 } else { -4.0 * PI * sol.counts[i] as f64 / sol.params.lambda },
            }
        })
        .collect()
}

/// Regular part of `Delta_h u_j`: `Delta_h v_j` plus the smooth part of `Delta u0_j`.
fn regular_laplacian(sol: &Solution, j: usize) -> Vec<f64> {
    let n = sol.lattice.len();
    let mut lap = vec![0.0; n];
    sol.lattice.neg_laplacian(&sol.state.v[j], Some(&sol.active), &mut lap);
    (0..n)
        .map(|k| if sol.active[k] { -lap[k] + sol.regular_source[j][k] } else { 0.0 })
        .collect()
}

/// Diagonal entries `B_1, ..., B_N` of the magnetic field on the unknown nodes:
/// `B_1 = -2 s mu^2 a^2 (e^{u_1} + 1)` and `B_{i+1} = B_i + (s/2) Delta u_i`,
/// with the vortex deltas removed from `Delta u_i`.
pub fn magnetic_field(sol: &Solution) -> Vec<Vec<f64>> {
    let p = &sol.params;
    let s = p.s.value();
    let mu2 = p.mu_squared();
    let n = sol.lattice.len();
    let mut fields = Vec::with_capacity(p.n_gauge());
    let b1: Vec<f64> = (0..n)
        .map(|k| {
            if sol.active[k] {
                -2.0 * s * mu2 * p.a * p.a * (sol.state.eu[0][k] + 1.0)
            } else {
                0.0
            }
        })
        .collect();
    fields.push(b1);
    for j in 0..p.m {
        let lap = regular_laplacian(sol, j);
        let prev = &fields[j];
        let next: Vec<f64> = (0..n).map(|k| prev[k] + 0.5 * s * lap[k]).collect();
        fields.push(next);
    }
    fields
}

/// The same field from the closed pointwise expression
/// `B_i = -2 s mu^2 (a^2 + i - 1)(e^{u_i} - e^{u_{i-1}} + 1)` with `e^{u_0} = e^{u_N} = 0`.
pub fn magnetic_field_direct(sol: &Solution) -> Vec<Vec<f64>> {
    let p = &sol.params;
    let s = p.s.value();
    let mu2 = p.mu_squared();
    let n = sol.lattice.len();
    let big_n = p.n_gauge();
    let eu = |i: usize, k: usize| -> f64 {
        if i == 0 || i == big_n {
            0.0
        } else {
            sol.state.eu[i - 1][k]
        }
    };
    (1..=big_n)
        .map(|i| {
            let coef = -2.0 * s * mu2 * (p.a * p.a + (i - 1) as f64);
            (0..n)
                .map(|k| {
                    if sol.active[k] {
                        coef * (eu(i, k) - eu(i - 1, k) + 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// `max |B_rec - B_direct| / max |B_direct|` over all components and unknown nodes.
pub fn magnetic_crosscheck(sol: &Solution) -> f64 {
    let a = magnetic_field(sol);
    let b = magnetic_field_direct(sol);
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (fa, fb) in a.iter().zip(&b) {
        for (x, y) in fa.iter().zip(fb) {
            diff = diff.max((x - y).abs());
            scale = scale.max(y.abs());
        }
    }
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flux {
    /// `-s integral Tr B`
    pub numeric: f64,
    /// `2 N a^2 ((1 + r_1) mu^2 |Omega| - pi sum_i (R^-1)_1i n_i) + 2 pi sum_i (N - i) n_i`
    pub closed_form: f64,
}

impl Flux {
    pub fn relative_error(&self) -> f64 {
        let diff = (self.numeric - self.closed_form).abs();
        if self.closed_form == 0.0 {
            diff
        } else {
            diff / self.closed_form.abs()
        }
    }
}

pub fn flux_closed_form(params: &ModelParams, cm: &CouplingMatrix, counts: &[usize], area: f64) -> f64 {
    let big_n = params.n_gauge() as f64;
    let a2 = params.a * params.a;
    let mu2 = params.mu_squared();
    let first: f64 = (0..params.m).map(|i| cm.r_inv[(0, i)] * counts[i] as f64).sum();
    let topological: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (big_n - (i + 1) as f64) * c as f64)
        .sum();
    2.0 * big_n * a2 * ((1.0 + cm.r[0]) * mu2 * area - PI * first) + 2.0 * PI * topological
}

/// Total flux of a periodic solution. The flux over the whole plane diverges
/// whenever `a > 0` and is not evaluated for planar states.
pub fn total_flux(sol: &Solution, cm: &CouplingMatrix) -> Result<Flux> {
    let Domain::Torus { l1, l2 } = sol.domain else {
        return Err(Error::DivergentFlux);
    };
    let s = sol.params.s.value();
    let cell = sol.lattice.cell_area();
    let b = magnetic_field(sol);
    let mut trace = 0.0;
    for field in &b {
        trace += field.iter().sum::<f64>();
    }
    Ok(Flux {
        numeric: -s * cell * trace,
        closed_form: flux_closed_form(&sol.params, cm, &sol.counts, l1 * l2),
    })
}

/// `E = k mu sum_i (N - i) n_i`, valid only at `a = 0`.
pub fn energy_a0(params: &ModelParams, counts: &[usize]) -> Result<f64> {
    if params.a != 0.0 {
        return Err(Error::Unsupported(format!(
            "energy quantization holds only at a = 0 (a = {})",
            params.a
        )));
    }
    let big_n = params.n_gauge();
    let sum: usize = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (big_n - (i + 1)) * c)
        .sum();
    Ok(params.k * params.mu() * sum as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub quantized: Vec<QuantizedIntegral>,
    pub flux: Option<Flux>,
    pub energy: Option<f64>,
    /// `(k mu / 2 pi) |integral Tr B|` from the numeric flux.
    pub energy_from_flux: Option<f64>,
    pub decay: Option<DecayFit>,
    pub decay_note: Option<String>,
    pub magnetic_crosscheck: f64,
}

pub fn build_report(sol: &Solution, cm: &CouplingMatrix) -> Result<SolveReport> {
    let quantized = quantized_integrals(sol, cm);
    let flux = match total_flux(sol, cm) {
        Ok(f) => Some(f),
        Err(Error::DivergentFlux) => None,
        Err(e) => return Err(e),
    };
    let energy = energy_a0(&sol.params, &sol.counts).ok();
    let energy_from_flux = match (energy, flux) {
        (Some(_), Some(f)) => Some(sol.params.k * sol.params.mu() / (2.0 * PI) * f.numeric.abs()),
        _ => None,
    };
    let (decay, decay_note) = match sol.domain {
        Domain::Disk { .. } => match decay_fit(sol, cm) {
            Ok(fit) => (Some(fit), None),
            Err(Error::FitDegenerate(msg)) => (None, Some(msg)),
            Err(e) => return Err(e),
        },
        Domain::Torus { .. } => (None, None),
    };
    Ok(SolveReport {
        quantized,
        flux,
        energy,
        energy_from_flux,
        decay,
        decay_note,
        magnetic_crosscheck: magnetic_crosscheck(sol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        let p = ModelParams::new(2, 0.0, 4.0).unwrap();
        assert_eq!(energy_a0(&p, &[0, 0]).unwrap(), 0.0);
        assert_eq!(energy_a0(&p, &[1, 1]).unwrap(), 3.0);
        let p = ModelParams::new(2, 0.5, 4.0).unwrap();
        assert!(matches!(energy_a0(&p, &[1, 1]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn flux_closed_form_examples() {
        let p = ModelParams::new(3, 0.0, 4.0).unwrap();
        let cm = CouplingMatrix::new(0.0, 3).unwrap();
        // a = 0: 2 pi sum (N - i) n_i, independent of the area
        let f = flux_closed_form(&p, &cm, &[1, 2, 1], 7.0);
        assert!((f - 2.0 * PI * (3.0 + 4.0 + 1.0)).abs() < 1e-12);
        assert_eq!(flux_closed_form(&p, &cm, &[0, 0, 0], 3.0), 0.0);

        // a = 1, m = 2, n = (1, 1), mu = 1, |Omega| = 4, with R^-1 = [[5,2],[2,3]]/11
        let p = ModelParams::new(2, 1.0, 4.0).unwrap();
        let cm = CouplingMatrix::new(1.0, 2).unwrap();
        let want = 6.0 * ((1.0 + 7.0 / 11.0) * 4.0 - PI * 7.0 / 11.0) + 2.0 * PI * 3.0;
        assert!((flux_closed_form(&p, &cm, &[1, 1], 4.0) - want).abs() < 1e-12);
    }
}
