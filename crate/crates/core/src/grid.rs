//! Uniform Cartesian lattices: a masked square for the disk and a periodic
//! rectangle for the torus. Both use the 5-point stencil.

use crate::error::{Error, Result};
use crate::matrix::CouplingMatrix;
use crate::params::ModelParams;
use crate::vortex::VortexConfiguration;

/// Node `k = iy * nx + ix` sits at `(x0 + ix dx, y0 + iy dy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
    pub periodic: bool,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn position(&self, k: usize) -> [f64; 2] {
        let (ix, iy) = (k % self.nx, k / self.nx);
        [self.x0 + ix as f64 * self.dx, self.y0 + iy as f64 * self.dy]
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// `(-Delta_h f)` written as a sum of neighbour differences. Periodic
    /// lattices wrap; otherwise nodes on the outer frame are left at zero.
    /// With `active`, only those nodes are evaluated and the rest are zeroed.
    pub fn neg_laplacian(&self, f: &[f64], active: Option<&[bool]>, out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let cx = 1.0 / (self.dx * self.dx);
        let cy = 1.0 / (self.dy * self.dy);
        for iy in 0..ny {
            for ix in 0..nx {
                let k = iy * nx + ix;
                if active.is_some_and(|a| !a[k]) {
                    out[k] = 0.0;
                    continue;
                }
                let (l, r, d, u) = if self.periodic {
                    let l = if ix == 0 { k + nx - 1 } else { k - 1 };
                    let r = if ix + 1 == nx { k + 1 - nx } else { k + 1 };
                    let d = if iy == 0 { k + nx * (ny - 1) } else { k - nx };
                    let u = if iy + 1 == ny { ix } else { k + nx };
                    (l, r, d, u)
                } else {
                    if ix == 0 || iy == 0 || ix + 1 == nx || iy + 1 == ny {
                        out[k] = 0.0;
                        continue;
                    }
                    (k - 1, k + 1, k - nx, k + nx)
                };
                let c = f[k];
                out[k] = cx * ((c - f[l]) + (c - f[r])) + cy * ((c - f[d]) + (c - f[u]));
            }
        }
    }

    /// `sum over edges ((f_a - f_b) / h)^2`, restricted to edges with at least
    /// one `active` endpoint.
    pub fn dirichlet_energy(&self, f: &[f64], active: Option<&[bool]>) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let cx = 1.0 / (self.dx * self.dx);
        let cy = 1.0 / (self.dy * self.dy);
        let on = |k: usize| active.is_none_or(|a| a[k]);
        let mut sum = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                let k = iy * nx + ix;
                let right = if ix + 1 < nx {
                    Some(k + 1)
                } else if self.periodic {
                    Some(k + 1 - nx)
                } else {
                    None
                };
                let up = if iy + 1 < ny {
                    Some(k + nx)
                } else if self.periodic {
                    Some(ix)
                } else {
                    None
                };
                if let Some(r) = right {
                    if on(k) || on(r) {
                        let d = f[k] - f[r];
                        sum += cx * d * d;
                    }
                }
                if let Some(u) = up {
                    if on(k) || on(u) {
                        let d = f[k] - f[u];
                        sum += cy * d * d;
                    }
                }
            }
        }
        sum
    }
}

/// Square lattice over `[-radius, radius]^2`; nodes strictly inside the disk
/// are unknowns, the rest carry boundary data.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskGrid {
    pub radius: f64,
    pub lattice: Lattice,
    pub free: Vec<bool>,
}

impl DiskGrid {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!("disk radius must be > 0, got {radius}")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("disk grid needs n >= 8 nodes per side, got {n}")));
        }
        let h = 2.0 * radius / (n - 1) as f64;
        let lattice = Lattice {
            nx: n,
            ny: n,
            dx: h,
            dy: h,
            x0: -radius,
            y0: -radius,
            periodic: false,
        };
        let r2 = radius * radius;
        let free = (0..lattice.len())
            .map(|k| {
                let p = lattice.position(k);
                p[0] * p[0] + p[1] * p[1] < r2
            })
            .collect();
        Ok(DiskGrid {
            radius,
            lattice,
            free,
        })
    }

    /// Even `n` with spacing at most `0.2 / sqrt(lambda lambda0)`; even `n` keeps
    /// the origin off the lattice.
    pub fn resolving(radius: f64, lambda: f64, lambda0: f64) -> Result<Self> {
        let h_max = 0.2 / (lambda * lambda0).sqrt();
        let mut n = (2.0 * radius / h_max).ceil() as usize + 1;
        if n % 2 == 1 {
            n += 1;
        }
        DiskGrid::new(radius, n.max(8))
    }

    pub fn spacing(&self) -> f64 {
        self.lattice.dx
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn check_covers(&self, cfg: &VortexConfiguration) -> Result<()> {
        let max = cfg.max_radius();
        if max >= self.radius {
            return Err(Error::InvalidGrid(format!(
                "disk radius {} does not strictly contain vortex at distance {max}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Truncation radius `max(20 / sqrt(lambda lambda0), 3 max|p|, 5 sqrt(nu))`.
pub fn planar_radius(params: &ModelParams, cm: &CouplingMatrix, cfg: &VortexConfiguration) -> f64 {
    let decay = 20.0 / (params.lambda * cm.lambda0).sqrt();
    decay.max(3.0 * cfg.max_radius()).max(5.0 * params.nu.sqrt())
}

/// Periodic `nx x ny` lattice on the rectangle `[0, l1) x [0, l2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid {
    pub l1: f64,
    pub l2: f64,
    pub lattice: Lattice,
}

impl TorusGrid {
    pub fn new(l1: f64, l2: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0) || !(l1.is_finite() && l2.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell sides must be > 0, got {l1} x {l2}")));
        }
        if nx < 4 || ny < 4 || nx % 2 == 1 || ny % 2 == 1 {
            return Err(Error::InvalidGrid(format!(
                "torus grid sizes must be even and >= 4, got {nx} x {ny}"
            )));
        }
        Ok(TorusGrid {
            l1,
            l2,
            lattice: Lattice {
                nx,
                ny,
                dx: l1 / nx as f64,
                dy: l2 / ny as f64,
                x0: 0.0,
                y0: 0.0,
                periodic: true,
            },
        })
    }

    pub fn area(&self) -> f64 {
        self.l1 * self.l2
    }

    /// Node nearest to `p` after wrapping into the cell; exact ties go to the
    /// lower index along each axis.
    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let lat = &self.lattice;
        let snap = |x: f64, h: f64, n: usize| -> usize {
            let k = (x / h - 0.5).ceil() as i64;
            k.rem_euclid(n as i64) as usize
        };
        lat.index(snap(p[0], lat.dx, lat.nx), snap(p[1], lat.dy, lat.ny))
    }
}
