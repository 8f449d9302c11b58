//! Run configuration: line-oriented `key = value` text.
//!
//! ```text
//! schema = abjm-vortex-config/1
//! model.m = 2            # or model.N = 3
//! model.a = 0
//! model.lambda = 4       # or model.mu = 1
//! model.k = 1            # optional
//! model.s = -1           # optional
//! domain.kind = torus    # or disk
//! domain.L1 = 4          # torus
//! domain.L2 = 4          # torus
//! domain.radius = auto   # disk; auto or a number
//! domain.nx = 128        # auto allowed on the disk
//! domain.ny = 128
//! vortices.1 = 0.5,0.5; 1.25,2
//! vortices.2 =
//! solver.tol = 1e-10
//! solver.max_iter = 500
//! solver.nu = auto       # disk only
//! solver.route = direct  # torus: direct or constrained
//! output = out
//! ```
//!
//! `#` starts a comment. Every `vortices.<i>` for `i = 1..m` must be present;
//! an empty value means no vortices of that species.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Sign};
use crate::solution::Route;
use crate::vortex::VortexConfiguration;

pub const CONFIG_SCHEMA: &str = "abjm-vortex-config/1";

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Disk {
        radius: Option<f64>,
        n: Option<usize>,
    },
    Torus {
        l1: f64,
        l2: f64,
        nx: usize,
        ny: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub domain: DomainSpec,
    pub vortices: VortexConfiguration,
    pub tol: f64,
    pub max_iter: usize,
    /// `None` means autotune.
    pub nu: Option<f64>,
    pub route: Route,
    pub output: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: expected a number, got '{v}'"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: expected a nonnegative integer, got '{v}'"))),
        }
    }

    fn auto_count(&mut self, key: &str) -> Result<Option<usize>> {
        match self.map.get(key) {
            Some((_, v)) if v == "auto" => {
                self.take(key);
                Ok(None)
            }
            _ => self.count(key),
        }
    }

    fn auto_number(&mut self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            Some((_, v)) if v == "auto" => {
                self.take(key);
                Ok(None)
            }
            _ => self.number(key),
        }
    }
}

fn parse_points(key: &str, value: &str) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for chunk in value.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let coords: Vec<&str> = chunk.split(',').map(str::trim).collect();
        let parsed: Vec<f64> = coords.iter().filter_map(|c| c.parse().ok()).collect();
        if coords.len() != 2 || parsed.len() != 2 {
            return Err(Error::Config(format!("{key}: expected 'x,y' pairs separated by ';', got '{chunk}'")));
        }
        out.push([parsed[0], parsed[1]]);
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected 'key = value'", lineno + 1)));
            };
            let key = key.trim().to_string();
            if let Some((first, _)) = map.insert(key.clone(), (lineno + 1, value.trim().to_string())) {
                return Err(Error::Config(format!(
                    "{key}: given twice (lines {first} and {})",
                    lineno + 1
                )));
            }
        }
        let mut e = Entries { map };

        match e.take("schema") {
            Some(s) if s == CONFIG_SCHEMA => {}
            Some(s) => return Err(Error::Config(format!("schema: expected '{CONFIG_SCHEMA}', got '{s}'"))),
            None => return Err(Error::Config(format!("schema: missing (expected '{CONFIG_SCHEMA}')"))),
        }

        let m = match (e.count("model.m")?, e.count("model.N")?) {
            (Some(m), None) => m,
            (None, Some(n)) if n >= 1 => n - 1,
            (None, Some(n)) => return Err(Error::Config(format!("model.N: must be >= 3, got {n}"))),
            (Some(_), Some(_)) => return Err(Error::Config("model.m and model.N: give exactly one".into())),
            (None, None) => return Err(Error::Config("model.m: missing (or give model.N)".into())),
        };
        let a = e.number("model.a")?.ok_or_else(|| Error::Config("model.a: missing".into()))?;
        let lambda = match (e.number("model.lambda")?, e.number("model.mu")?) {
            (Some(l), None) => l,
            (None, Some(mu)) => 4.0 * mu * mu,
            (Some(_), Some(_)) => {
                return Err(Error::Config("model.lambda and model.mu: give exactly one".into()))
            }
            (None, None) => return Err(Error::Config("model.lambda: missing (or give model.mu)".into())),
        };
        let mut params = ModelParams::new(m, a, lambda)?;
        if let Some(k) = e.number("model.k")? {
            params.k = k;
        }
        if let Some(s) = e.number("model.s")? {
            if s.fract() != 0.0 {
                return Err(Error::Config(format!("model.s must be +1 or -1, got {s}")));
            }
            params.s = Sign::from_i32(s as i32)?;
        }

        let kind = e.take("domain.kind").ok_or_else(|| Error::Config("domain.kind: missing".into()))?;
        let domain = match kind.as_str() {
            "disk" => {
                let radius = e.auto_number("domain.radius")?;
                let nx = e.auto_count("domain.nx")?;
                let ny = e.auto_count("domain.ny")?;
                let n = match (nx, ny) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(Error::Config(format!("domain.nx/domain.ny: disk grids are square, got {a} and {b}")))
                    }
                    (a, b) => a.or(b),
                };
                DomainSpec::Disk { radius, n }
            }
            "torus" => {
                let l1 = e.number("domain.L1")?.ok_or_else(|| Error::Config("domain.L1: missing".into()))?;
                let l2 = e.number("domain.L2")?.ok_or_else(|| Error::Config("domain.L2: missing".into()))?;
                let nx = e.count("domain.nx")?.unwrap_or(128);
                let ny = e.count("domain.ny")?.unwrap_or(128);
                DomainSpec::Torus { l1, l2, nx, ny }
            }
            other => return Err(Error::Config(format!("domain.kind: expected disk or torus, got '{other}'"))),
        };

        let mut points = Vec::with_capacity(m);
        for i in 1..=m {
            let key = format!("vortices.{i}");
            let value = e.take(&key).ok_or_else(|| Error::Config(format!("{key}: missing (vortex list length must equal m = {m})")))?;
            points.push(parse_points(&key, &value)?);
        }
        let vortices = VortexConfiguration::new(points)?;

        let tol = e.number("solver.tol")?.unwrap_or(1e-10);
        if !(tol > 0.0) {
            return Err(Error::Config(format!("solver.tol: must be > 0, got {tol}")));
        }
        let max_iter = e.count("solver.max_iter")?.unwrap_or(500);
        let nu = e.auto_number("solver.nu")?;
        if let Some(v) = nu {
            params = params.with_nu(v)?;
        }
        let route = match e.take("solver.route").as_deref() {
            None | Some("direct") => Route::Direct,
            Some("constrained") => Route::Constrained,
            Some(other) => return Err(Error::Config(format!("solver.route: expected direct or constrained, got '{other}'"))),
        };
        let output = e.take("output").map(PathBuf::from);

        if let Some((key, (line, _))) = e.map.into_iter().next() {
            return Err(Error::Config(format!("{key}: unknown key (line {line})")));
        }
        if matches!(domain, DomainSpec::Disk { .. }) && route == Route::Constrained {
            return Err(Error::Config("solver.route: constrained applies to torus domains only".into()));
        }
        let route = if matches!(domain, DomainSpec::Disk { .. }) { Route::Planar } else { route };
        Ok(RunConfig {
            params,
            domain,
            vortices,
            tol,
            max_iter,
            nu,
            route,
            output,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
