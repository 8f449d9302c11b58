//! Report, field and CSV writers.
//!
//! Field files are one ASCII header line
//! `ROWS <ny> COLS <nx> DX <dx> DY <dy>` followed by `ny * nx` little-endian
//! IEEE-754 doubles in row-major order (`k = iy * nx + ix`).

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::SolveReport;
use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::solution::{Domain, Solution};
use crate::torus::ScanRow;

pub const REPORT_SCHEMA: &str = "abjm-vortex-report/1";
pub const SCAN_SCHEMA: &str = "abjm-vortex-scan/1";

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn list<T>(values: &[T], f: impl Fn(&T) -> String) -> String {
    values.iter().map(f).collect::<Vec<_>>().join(",")
}

/// Key-value text with a fixed key order. Timing is deliberately absent so
/// identical runs give identical bytes.
pub fn render_report(sol: &Solution, report: &SolveReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    let p = &sol.params;
    kv("schema", REPORT_SCHEMA.to_string());
    kv("model.m", p.m.to_string());
    kv("model.N", p.n_gauge().to_string());
    kv("model.a", num(p.a));
    kv("model.lambda", num(p.lambda));
    kv("model.mu", num(p.mu()));
    kv("model.k", num(p.k));
    kv("model.s", (p.s.value() as i32).to_string());
    kv("domain.kind", sol.domain.name().to_string());
    match sol.domain {
        Domain::Disk { radius } => kv("domain.radius", num(radius)),
        Domain::Torus { l1, l2 } => {
            kv("domain.L1", num(l1));
            kv("domain.L2", num(l2));
        }
    }
    kv("domain.area", num(sol.area_of_domain()));
    kv("grid.nx", sol.lattice.nx.to_string());
    kv("grid.ny", sol.lattice.ny.to_string());
    kv("grid.dx", num(sol.lattice.dx));
    kv("grid.dy", num(sol.lattice.dy));
    kv("grid.unknown_nodes", sol.active.iter().filter(|&&a| a).count().to_string());
    kv("vortices.counts", list(&sol.counts, |c| c.to_string()));
    match sol.nu {
        Some(nu) => kv("background.nu", num(nu)),
        None => kv("background.nu", "none".into()),
    }
    if let Some(sup) = sol.h_tilde_sup {
        kv("background.h_tilde_sup", num(sup));
    }
    kv("background.coincident", sol.coincident.to_string());
    let c = &sol.convergence;
    kv("solver.route", sol.route.name().to_string());
    kv("convergence.converged", c.converged.to_string());
    kv("convergence.iterations", c.iterations.to_string());
    kv("convergence.fallback_steps", c.fallback_steps.to_string());
    kv("convergence.residual", num(c.residual));
    kv("convergence.functional", num(c.functional_value));
    kv("convergence.history", list(&c.history, |v| num(*v)));
    for (i, q) in report.quantized.iter().enumerate() {
        kv(&format!("quantized.{}.computed", i + 1), num(q.computed));
        kv(&format!("quantized.{}.target", i + 1), num(q.target));
        kv(&format!("quantized.{}.error", i + 1), num(q.error()));
    }
    kv("magnetic.crosscheck", num(report.magnetic_crosscheck));
    match &report.flux {
        Some(f) => {
            kv("flux.numeric", num(f.numeric));
            kv("flux.closed_form", num(f.closed_form));
            kv("flux.relative_error", num(f.relative_error()));
        }
        None => kv("flux", "divergent".into()),
    }
    match report.energy {
        Some(e) => kv("energy", num(e)),
        None => kv("energy", "unsupported".into()),
    }
    if let Some(e) = report.energy_from_flux {
        kv("energy.from_flux", num(e));
    }
    if let Domain::Disk { .. } = sol.domain {
        match (&report.decay, &report.decay_note) {
            (Some(fit), _) => {
                match fit.sigma_fit {
                    Some(s) => kv("decay.sigma_fit", num(s)),
                    None => kv("decay.sigma_fit", "skipped".into()),
                }
                kv("decay.reference", num(fit.reference));
                kv("decay.points", fit.points.to_string());
                kv("decay.passes", fit.passes.to_string());
            }
            (None, Some(note)) => kv("decay", format!("degenerate: {note}")),
            (None, None) => {}
        }
    }
    if let Some(t) = &sol.torus {
        kv("torus.near_threshold", t.near_threshold.to_string());
        for (i, cond) in t.existence.conditions.iter().enumerate() {
            kv(&format!("existence.{}.lhs", i + 1), num(cond.lhs));
            kv(&format!("existence.{}.rhs", i + 1), num(cond.rhs));
            kv(&format!("existence.{}.holds", i + 1), cond.holds.to_string());
        }
        for (i, k) in t.k.iter().enumerate() {
            kv(&format!("torus.K.{}", i + 1), num(*k));
            kv(&format!("torus.constraint_residual.{}", i + 1), num(t.constraint_residuals[i]));
        }
    }
    for i in 0..sol.m() {
        let u = &sol.state.u[i];
        let min = u.iter().zip(&sol.active).filter(|(_, &a)| a).map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
        let max = u.iter().zip(&sol.active).filter(|(_, &a)| a).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        kv(&format!("field.u{}.min", i + 1), num(min));
        kv(&format!("field.u{}.max", i + 1), num(max));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A field file as read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub data: Vec<f64>,
}

pub fn field_header(lat: &Lattice) -> String {
    format!("ROWS {} COLS {} DX {} DY {}\n", lat.ny, lat.nx, num(lat.dx), num(lat.dy))
}

pub fn write_field(path: &Path, lat: &Lattice, data: &[f64]) -> Result<()> {
    if data.len() != lat.len() {
        return Err(Error::InvalidDimension(format!(
            "field has {} values for a {}x{} grid",
            data.len(),
            lat.ny,
            lat.nx
        )));
    }
    let mut bytes = field_header(lat).into_bytes();
    bytes.reserve(8 * data.len());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    reader.read_line(&mut header).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 8 || tokens[0] != "ROWS" || tokens[2] != "COLS" || tokens[4] != "DX" || tokens[6] != "DY" {
        return Err(bad("header must read 'ROWS <ny> COLS <nx> DX <dx> DY <dy>'"));
    }
    let ny: usize = tokens[1].parse().map_err(|_| bad("bad ROWS"))?;
    let nx: usize = tokens[3].parse().map_err(|_| bad("bad COLS"))?;
    let dx: f64 = tokens[5].parse().map_err(|_| bad("bad DX"))?;
    let dy: f64 = tokens[7].parse().map_err(|_| bad("bad DY"))?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    if payload.len() != 8 * nx * ny {
        return Err(bad(&format!("expected {} payload bytes, found {}", 8 * nx * ny, payload.len())));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(FieldFile { nx, ny, dx, dy, data })
}

/// Values along the grid row nearest the centre of the domain.
pub fn write_profile(path: &Path, sol: &Solution) -> Result<()> {
    let lat = &sol.lattice;
    let iy = lat.ny / 2;
    let io = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["x".to_string(), "y".to_string(), "unknown".to_string()];
    for i in 1..=sol.m() {
        header.push(format!("u{i}"));
    }
    for i in 1..=sol.m() {
        header.push(format!("exp_u{i}"));
    }
    w.write_record(&header).map_err(io)?;
    for ix in 0..lat.nx {
        let k = lat.index(ix, iy);
        let p = lat.position(k);
        let mut rec = vec![num(p[0]), num(p[1]), sol.active[k].to_string()];
        rec.extend(sol.state.u.iter().map(|u| num(u[k])));
        rec.extend(sol.state.eu.iter().map(|e| num(e[k])));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `report.txt`, `u<i>.bin`, `exp_u<i>.bin` and `profile.csv` into `dir`.
pub fn write_outputs(sol: &Solution, report: &SolveReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join("report.txt");
    write_text(&path, &render_report(sol, report))?;
    written.push(path);
    for i in 0..sol.m() {
        let path = dir.join(format!("u{}.bin", i + 1));
        write_field(&path, &sol.lattice, &sol.state.u[i])?;
        written.push(path);
        let path = dir.join(format!("exp_u{}.bin", i + 1));
        write_field(&path, &sol.lattice, &sol.state.eu[i])?;
        written.push(path);
    }
    let path = dir.join("profile.csv");
    write_profile(&path, sol)?;
    written.push(path);
    Ok(written)
}

pub fn write_scan(path: &Path, rows: &[ScanRow], m: usize) -> Result<()> {
    let err = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut file = std::io::BufWriter::new(file);
    writeln!(file, "# schema = {SCAN_SCHEMA}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<String> = ["lambda", "area", "verdict", "failing"].iter().map(|s| s.to_string()).collect();
    for i in 1..=m {
        header.push(format!("K{i}"));
    }
    header.extend(["iterations", "residual", "functional"].iter().map(|s| s.to_string()));
    for i in 1..=m {
        header.push(format!("constraint_residual{i}"));
    }
    for i in 1..=m {
        header.push(format!("u{i}_min"));
        header.push(format!("u{i}_max"));
    }
    header.push("error".into());
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let mut rec = vec![
            num(row.lambda),
            num(row.area),
            if row.holds { "exists" } else { "none" }.to_string(),
            row.failing.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" "),
        ];
        for i in 0..m {
            rec.push(row.k.get(i).map_or(String::new(), |k| num(*k)));
        }
        match &row.solve {
            Some(s) => {
                rec.push(s.iterations.to_string());
                rec.push(num(s.residual));
                rec.push(num(s.functional_value));
                rec.extend(s.constraint_residuals.iter().map(|v| num(*v)));
                for i in 0..m {
                    rec.push(num(s.u_min[i]));
                    rec.push(num(s.u_max[i]));
                }
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 3 + 3 * m)),
        }
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
