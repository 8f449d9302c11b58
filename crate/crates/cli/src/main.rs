//! `abjm-vortex`: matrix data, existence checks, solves and threshold scans.
//!
//! Exit codes: 0 success, 1 numerical failure (or, for `check`, a violated
//! condition), 2 certified nonexistence, 64 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use abjm_vortex::output::{render_report, write_scan, write_text};
use abjm_vortex::{
    area_scan, build_report, constrained_solve_torus, planar_setup, solve_planar, solve_torus, threshold_scan,
    write_outputs, CouplingMatrix, DomainSpec, Error, ExistenceReport, PlanarOptions, Route, RunConfig, Solution,
    TorusGrid, TorusOptions,
};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_FAILURE: u8 = 1;
const EXIT_NONEXISTENCE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "abjm-vortex", version, about = "Multi-vortex solutions of the reduced ABJM BPS system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print R, L, L^-1, R^-1, r, the leading minors and lambda0
    Matrix {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        m: usize,
    },
    /// Evaluate the periodic existence conditions of a torus config
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve and write report, field files and a profile
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: `output` from the config, else `out`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan lambda or the cell area of a torus config
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: ScanParam,
        /// lo:hi:steps, endpoints included
        #[arg(long)]
        range: String,
        /// CSV file, or a directory to receive scan.csv
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanParam {
    Lambda,
    Area,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Nonexistence(ExistenceReport),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidDimension(_) | Error::InvalidGrid(_) => Failure::Usage(e.to_string()),
            Error::Nonexistence(rep) => Failure::Nonexistence(rep),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Matrix { a, m } => cmd_matrix(a, m),
        Command::Check { config } => cmd_check(&config),
        Command::Solve { config, out } => cmd_solve(&config, out),
        Command::Scan {
            config,
            param,
            range,
            out,
        } => cmd_scan(&config, param, &range, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(Failure::Nonexistence(rep)) => {
            eprint!("{}", certificate(&rep));
            ExitCode::from(EXIT_NONEXISTENCE)
        }
    }
}

fn row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_matrix(a: f64, m: usize) -> Result<u8, Failure> {
    let cm = CouplingMatrix::new(a, m)?;
    println!("schema = abjm-vortex-matrix/1");
    println!("a = {a}");
    println!("m = {m}");
    for (name, mat) in [("R", &cm.r_mat), ("L", &cm.l), ("L_inv", &cm.l_inv), ("R_inv", &cm.r_inv)] {
        println!("{name} =");
        for i in 0..m {
            println!("  {}", row((0..m).map(|j| mat[(i, j)])));
        }
    }
    println!("r = {}", row(cm.r.iter().copied()));
    println!("minors = {}", row(cm.minors.iter().copied()));
    println!("lambda0 = {}", cm.lambda0);
    Ok(0)
}

fn certificate(rep: &ExistenceReport) -> String {
    let mut s = String::from("no doubly periodic solution exists\n");
    for (i, c) in rep.conditions.iter().enumerate() {
        s.push_str(&format!(
            "condition {}: lhs = {:.17e}  rhs = {:.17e}  {}\n",
            i + 1,
            c.lhs,
            c.rhs,
            if c.holds { "holds" } else { "violated" }
        ));
    }
    let failing: Vec<String> = rep.failing_indices().iter().map(|i| (i + 1).to_string()).collect();
    s.push_str(&format!("violated = {}\n", failing.join(" ")));
    s
}

fn torus_parts(cfg: &RunConfig) -> Result<TorusGrid, Failure> {
    match cfg.domain {
        DomainSpec::Torus { l1, l2, nx, ny } => Ok(TorusGrid::new(l1, l2, nx, ny)?),
        DomainSpec::Disk { .. } => Err(Failure::Usage(
            "existence conditions and scans apply to torus configs only".into(),
        )),
    }
}

fn cmd_check(path: &Path) -> Result<u8, Failure> {
    let cfg = RunConfig::from_file(path)?;
    let grid = torus_parts(&cfg)?;
    let cm = CouplingMatrix::new(cfg.params.a, cfg.params.m)?;
    let counts = cfg.vortices.counts();
    let rep = cm.check_torus_existence(cfg.params.lambda, &counts, grid.area())?;
    println!("schema = abjm-vortex-check/1");
    println!("area = {:.17e}", grid.area());
    println!("lambda = {:.17e}", cfg.params.lambda);
    for (i, c) in rep.conditions.iter().enumerate() {
        println!(
            "condition.{} = 4 pi sum_j Rinv[{},j] n_j = {:.17e} < lambda |Omega| r_{} = {:.17e} : {}",
            i + 1,
            i + 1,
            c.lhs,
            i + 1,
            c.rhs,
            if c.holds { "holds" } else { "violated" }
        );
    }
    for (i, k) in rep.k.iter().enumerate() {
        println!("K.{} = {:.17e}", i + 1, k);
    }
    println!("lambda_threshold = {:.17e}", cm.existence_threshold_lambda(&counts, grid.area()));
    if rep.all_hold() {
        println!("verdict = exists");
        Ok(0)
    } else {
        let failing: Vec<String> = rep.failing_indices().iter().map(|i| (i + 1).to_string()).collect();
        println!("verdict = none");
        println!("violated = {}", failing.join(" "));
        Ok(EXIT_FAILURE)
    }
}

fn run_solve(cfg: &RunConfig) -> Result<(Solution, CouplingMatrix), Failure> {
    let cm = CouplingMatrix::new(cfg.params.a, cfg.params.m)?;
    let sol = match cfg.domain {
        DomainSpec::Disk { radius, n } => {
            let (params, grid) = planar_setup(&cfg.vortices, &cfg.params, &cm, cfg.nu, radius, n)?;
            let opts = PlanarOptions {
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                initial: None,
            };
            solve_planar(&cfg.vortices, &params, &grid, &opts)?
        }
        DomainSpec::Torus { l1, l2, nx, ny } => {
            let grid = TorusGrid::new(l1, l2, nx, ny)?;
            let opts = TorusOptions {
                tol: cfg.tol,
                max_iter: cfg.max_iter,
            };
            match cfg.route {
                Route::Constrained => constrained_solve_torus(&cfg.vortices, &cfg.params, &grid, &opts)?,
                _ => solve_torus(&cfg.vortices, &cfg.params, &grid, &opts)?,
            }
        }
    };
    Ok((sol, cm))
}

fn cmd_solve(path: &Path, out: Option<PathBuf>) -> Result<u8, Failure> {
    let cfg = RunConfig::from_file(path)?;
    let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let start = Instant::now();
    let solved = run_solve(&cfg);
    let (sol, cm) = match solved {
        Ok(s) => s,
        Err(Failure::Nonexistence(rep)) => {
            std::fs::create_dir_all(&dir).map_err(|e| Failure::from(Error::Io { path: dir.clone(), source: e }))?;
            write_text(&dir.join("certificate.txt"), &certificate(&rep))?;
            return Err(Failure::Nonexistence(rep));
        }
        Err(e) => return Err(e),
    };
    let report = build_report(&sol, &cm)?;
    write_outputs(&sol, &report, &dir)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_text(&dir.join("timing.txt"), &format!("wall_seconds = {elapsed:.6}\n"))?;
    print!("{}", render_report(&sol, &report));
    Ok(0)
}

fn parse_range(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("--range must be lo:hi:steps with steps >= 1 and lo <= hi, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() || (steps == 1 && lo != hi) {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect())
}

fn cmd_scan(path: &Path, param: ScanParam, range: &str, out: &Path) -> Result<u8, Failure> {
    let values = parse_range(range)?;
    let cfg = RunConfig::from_file(path)?;
    let grid = torus_parts(&cfg)?;
    let opts = TorusOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let rows = match param {
        ScanParam::Lambda => threshold_scan(&cfg.vortices, &cfg.params, &grid, &values, &opts)?,
        ScanParam::Area => area_scan(&cfg.vortices, &cfg.params, &grid, &values, &opts)?,
    };
    let file = if out.is_dir() { out.join("scan.csv") } else { out.to_path_buf() };
    write_scan(&file, &rows, cfg.params.m)?;
    for r in &rows {
        let status = match (&r.solve, &r.error) {
            (_, Some(e)) => format!("error: {e}"),
            (Some(s), None) => format!("converged in {} iterations", s.iterations),
            (None, None) => "not solved".into(),
        };
        println!(
            "lambda = {:.17e} area = {:.17e} verdict = {} {}",
            r.lambda,
            r.area,
            if r.holds { "exists" } else { "none" },
            status
        );
    }
    Ok(0)
}
