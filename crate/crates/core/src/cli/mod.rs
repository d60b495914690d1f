//! Command-line front end. [`run`] parses arguments, executes one query and
//! writes JSON or CSV to `out`; the binary only forwards `std::env::args`.
//!
//! Exit codes: 0 for any computed result (a `not_found` or `violated` verdict
//! included), 2 for input errors and 3 for numerical failures.

mod problem;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::certify::{self, matrix_json, NormMode, Record, UcpMapSpec};
use crate::error::{Error, Result};
use crate::freealg::{parse_entry, parse_poly, FreePoly};
use crate::heisenberg;
use crate::linalg::{self, CMat};
use crate::qmodule::{preset_names, ModuleDescription, ModuleFile, ModuleKind};
use crate::repsearch;

pub use problem::{MapEntry, ModuleSource, Params, ProblemFile, Query};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qmcert", version, about = "Norm brackets and positivity certificates for quadratic modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Upper bound from sums of squares and lower bound from representation search.
    Norm(NormArgs),
    /// Search for a certificate of `a + eps` in the degree-d truncation.
    Member(MemberArgs),
    /// Check a map on a unital *-subspace for complete positivity against the module.
    Ucp(UcpArgs),
    /// Scalar hull-projection membership of a point or a circle scan (CSV).
    Hull(HullArgs),
    /// Lower bound on a norm by projected gradient ascent over representations.
    Search(SearchArgs),
    /// Unitary dilation of a contraction.
    Dilate(DilateArgs),
    /// Spectral edges of the Harper operator at Farey angles (CSV).
    Butterfly(ButterflyArgs),
    /// List module presets.
    Presets,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Problem file; flags given on the command line override its values.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Cap on worker threads (0 lets the runtime decide).
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for every random choice (default 0)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct ModuleArgs {
    /// Preset name such as `free_group:2` (see `presets`).
    #[arg(long, conflicts_with = "module")]
    preset: Option<String>,
    /// Module description file (JSON).
    #[arg(long)]
    module: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    /// Truncation degree (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// `exact` or `ideal_pairs`.
    #[arg(long)]
    reduction_mode: Option<String>,
    /// SDP stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Interior-point iteration cap (default 200)
    #[arg(long)]
    max_iter: Option<usize>,
    /// Permit norm queries on modules without an archimedean bound.
    #[arg(long)]
    allow_non_archimedean: bool,
}

#[derive(Args, Debug, Default)]
struct SearchFlags {
    /// Representation dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Random restarts (default 32)
    #[arg(long)]
    restarts: Option<usize>,
    /// Ascent steps per restart (default 200)
    #[arg(long)]
    iterations: Option<usize>,
    /// Initial step size relative to the tuple (default 0.5)
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    module: ModuleArgs,
    #[arg(long)]
    poly: Option<String>,
    /// `auto`, `square` or `hermitian`.
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    search: SearchFlags,
}

#[derive(Args, Debug)]
struct MemberArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    module: ModuleArgs,
    #[arg(long)]
    poly: Option<String>,
    /// Shift added before the search (default 1e-6)
    #[arg(long)]
    eps: Option<f64>,
    /// Skip the explicit sum-of-squares decomposition.
    #[arg(long)]
    no_extract: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct UcpArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    module: ModuleArgs,
    /// `element=image`, e.g. `z=0.5` or `z=0 1; 0 0`; repeatable.
    #[arg(long = "map")]
    map: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct HullArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    module: ModuleArgs,
    /// Hermitian coordinate polynomial; repeatable. Defaults to the center
    /// coordinates for the Heisenberg preset.
    #[arg(long = "basis")]
    basis: Vec<String>,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Scan this many points on a circle instead of a single point.
    #[arg(long)]
    scan: Option<usize>,
    /// Circle radius for --scan (default 1)
    #[arg(long)]
    radius: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    module: ModuleArgs,
    #[arg(long)]
    poly: Option<String>,
    #[command(flatten)]
    search: SearchFlags,
}

#[derive(Args, Debug)]
struct DilateArgs {
    #[command(flatten)]
    common: Common,
    /// Rows separated by `;`, e.g. `0.5 0; 0 0.2`.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
}

#[derive(Args, Debug)]
struct ButterflyArgs {
    #[command(flatten)]
    common: Common,
    /// Largest denominator of the Farey angles (default 12)
    #[arg(long)]
    qmax: Option<i64>,
    /// Bloch-phase grid per axis (default 64)
    #[arg(long)]
    grid: Option<usize>,
}

fn parse_mode(s: &str) -> Result<NormMode> {
    match s {
        "auto" => Ok(NormMode::Auto),
        "square" => Ok(NormMode::Square),
        "hermitian" => Ok(NormMode::Hermitian),
        _ => Err(Error::InvalidInput(format!("--mode: expected auto, square or hermitian, got `{s}`"))),
    }
}

impl Common {
    fn base(&self, query: Query) -> Result<ProblemFile> {
        let p = match &self.problem {
            Some(path) => ProblemFile::load(path)?,
            None => ProblemFile::new(query),
        };
        if p.query != query {
            return Err(Error::InvalidInput(format!(
                "query: problem file asks for `{}` but the subcommand is `{query}`",
                p.query
            )));
        }
        Ok(p)
    }

    fn params(&self) -> Params {
        Params { jobs: self.jobs, seed: self.seed, ..Params::default() }
    }
}

impl ModuleArgs {
    fn apply(&self, p: &mut ProblemFile) -> Result<()> {
        if let Some(name) = &self.preset {
            p.module = Some(ModuleSource::Preset(name.clone()));
        }
        if let Some(path) = &self.module {
            p.module = Some(ModuleSource::Inline(ModuleFile::load(path)?));
        }
        Ok(())
    }
}

impl SolverArgs {
    fn params(&self) -> Params {
        Params {
            d: self.d,
            reduction_mode: self.reduction_mode.clone(),
            tol: self.tol,
            max_iter: self.max_iter,
            allow_non_archimedean: self.allow_non_archimedean.then_some(true),
            ..Params::default()
        }
    }
}

impl SearchFlags {
    fn params(&self) -> Params {
        Params {
            n: self.n,
            restarts: self.restarts,
            iterations: self.iterations,
            step: self.step,
            ..Params::default()
        }
    }
}

/// Problem file after command-line overrides and defaults.
fn resolve(command: &Command) -> Result<ProblemFile> {
    let (query, common) = match command {
        Command::Norm(a) => (Query::Norm, &a.common),
        Command::Member(a) => (Query::Member, &a.common),
        Command::Ucp(a) => (Query::Ucp, &a.common),
        Command::Hull(a) => (Query::Hull, &a.common),
        Command::Search(a) => (Query::Search, &a.common),
        Command::Dilate(a) => (Query::Dilate, &a.common),
        Command::Butterfly(a) => (Query::Butterfly, &a.common),
        Command::Presets => unreachable!("presets carries no problem"),
    };
    let mut p = common.base(query)?;
    let mut over = common.params();
    match command {
        Command::Norm(a) => {
            a.module.apply(&mut p)?;
            if a.poly.is_some() {
                p.poly = a.poly.clone();
            }
            if let Some(m) = &a.mode {
                over.mode = Some(parse_mode(m)?);
            }
            over.merge(&a.solver.params());
            over.merge(&a.search.params());
        }
        Command::Member(a) => {
            a.module.apply(&mut p)?;
            if a.poly.is_some() {
                p.poly = a.poly.clone();
            }
            over.eps = a.eps;
            if a.no_extract {
                over.extract = Some(false);
            }
            over.merge(&a.solver.params());
        }
        Command::Ucp(a) => {
            a.module.apply(&mut p)?;
            if !a.map.is_empty() {
                p.map = a
                    .map
                    .iter()
                    .map(|m| {
                        let (e, img) = m
                            .split_once('=')
                            .ok_or_else(|| Error::InvalidInput(format!("--map: expected element=image, got `{m}`")))?;
                        Ok(MapEntry { element: e.trim().into(), image: img.trim().into() })
                    })
                    .collect::<Result<_>>()?;
            }
            over.merge(&a.solver.params());
        }
        Command::Hull(a) => {
            a.module.apply(&mut p)?;
            if !a.basis.is_empty() {
                p.basis = a.basis.clone();
            }
            if a.point.is_some() {
                p.point = a.point.clone();
            }
            over.scan = a.scan;
            over.radius = a.radius;
            over.merge(&a.solver.params());
        }
        Command::Search(a) => {
            a.module.apply(&mut p)?;
            if a.poly.is_some() {
                p.poly = a.poly.clone();
            }
            over.merge(&a.search.params());
        }
        Command::Dilate(a) => {
            if a.matrix.is_some() {
                p.matrix = a.matrix.clone();
            }
        }
        Command::Butterfly(a) => {
            over.qmax = a.qmax;
            over.grid = a.grid;
        }
        Command::Presets => {}
    }
    p.params.merge(&over);
    p.params = p.params.resolve(query);
    Ok(p)
}

/// Parses `a b; c d` into a square matrix.
pub fn parse_matrix(text: &str) -> Result<CMat> {
    let rows: Vec<Vec<Complex64>> = text
        .split(';')
        .map(|row| {
            row.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| match s.parse::<f64>() {
                    Ok(v) => Ok(Complex64::new(v, 0.0)),
                    Err(_) => parse_entry(s),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("matrix `{text}` is not square")));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn parse_target(p: &ProblemFile, q: &ModuleDescription) -> Result<FreePoly> {
    parse_poly(&q.sig, p.poly_text()?)
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn search_json(r: &repsearch::SearchResult) -> Value {
    json!({
        "value": r.value,
        "violation": r.violation,
        "restart": r.restart,
        "n": r.x.dim(),
        "tuple": r.x.to_text(),
    })
}

fn execute(p: &ProblemFile) -> Result<String> {
    let config = serde_json::to_value(p).expect("problem serializes");
    let params = &p.params;
    match p.query {
        Query::Norm => {
            let q = p.module()?;
            let a = parse_target(p, &q)?;
            let opts = params.certify_options()?;
            let d = params.d.unwrap_or(problem::DEFAULT_D);
            let upper = certify::norm_upper(&a, &q, d, params.mode.unwrap_or(NormMode::Auto), &opts)?;
            let lower = match repsearch::search_lower(&a, &q, &params.search_config()) {
                Ok(r) => Some(r),
                Err(Error::InvalidInput(_)) => None,
                Err(e) => return Err(e),
            };
            let lo = lower.as_ref().map(|r| r.value);
            Ok(to_pretty(&json!({
                "config": config,
                "upper": Record::norm(p.poly_text()?, &upper),
                "lower": lower.as_ref().map(search_json),
                "bracket": {
                    "lower": lo,
                    "upper": upper.value,
                    "width": lo.map(|l| upper.value - l),
                },
            })))
        }
        Query::Member => {
            let q = p.module()?;
            let a = parse_target(p, &q)?;
            let opts = params.certify_options()?;
            let d = params.d.unwrap_or(problem::DEFAULT_D);
            let eps = params.eps.unwrap_or(problem::DEFAULT_EPS);
            let out = certify::member_eps(&a, &q, d, eps, &opts)?;
            let dec = match (&out.certificate, params.extract.unwrap_or(true)) {
                (Some(c), true) => Some(certify::extract_certificate(c, &q)?),
                _ => None,
            };
            let rec = Record::member(p.poly_text()?, d, eps, &out, &q.sig, dec.as_ref());
            Ok(to_pretty(&json!({ "config": config, "result": rec })))
        }
        Query::Ucp => {
            let q = p.module()?;
            let spec = ucp_spec(p, &q)?;
            let opts = params.certify_options()?;
            let d = params.d.unwrap_or(problem::DEFAULT_D);
            let out = certify::ucp_check(&spec, &q, d, &opts)?;
            let label = p.map.iter().map(|m| format!("{} -> {}", m.element, m.image)).collect::<Vec<_>>().join(", ");
            Ok(to_pretty(&json!({ "config": config, "result": Record::ucp(&label, d, &out) })))
        }
        Query::Hull => hull(p, config),
        Query::Search => {
            let q = p.module()?;
            let a = parse_target(p, &q)?;
            let r = repsearch::search_lower(&a, &q, &params.search_config())?;
            Ok(to_pretty(&json!({ "config": config, "result": search_json(&r) })))
        }
        Query::Dilate => {
            let t = parse_matrix(
                p.matrix.as_deref().ok_or_else(|| Error::InvalidInput("matrix: required for `dilate`".into()))?,
            )?;
            let u = repsearch::unitary_dilate(&t)?;
            let s = t.nrows();
            let unitarity = linalg::identity_residual(&(u.adjoint() * &u));
            let block = linalg::max_abs_diff(&u.view((0, 0), (s, s)).into_owned(), &t);
            Ok(to_pretty(&json!({
                "config": config,
                "result": {
                    "unitary": matrix_json(&u),
                    "unitarity_residual": unitarity,
                    "block_residual": block,
                },
            })))
        }
        Query::Butterfly => {
            let recs = heisenberg::butterfly(
                params.qmax.unwrap_or(problem::DEFAULT_QMAX),
                params.grid.unwrap_or(problem::DEFAULT_GRID),
            )?;
            Ok(heisenberg::butterfly_csv(&recs))
        }
    }
}

fn ucp_spec(p: &ProblemFile, q: &ModuleDescription) -> Result<UcpMapSpec> {
    if p.map.is_empty() {
        return Err(Error::InvalidInput("map: at least one `element=image` pair is required".into()));
    }
    let mut basis = Vec::new();
    let mut images = Vec::new();
    for m in &p.map {
        basis.push(parse_poly(&q.sig, &m.element)?);
        images.push(parse_matrix(&m.image)?);
    }
    // `ρ(b*) = ρ(b)*` for every listed `b` whose adjoint is not listed.
    for i in 0..basis.len() {
        let adj = basis[i].adjoint();
        if !basis.iter().any(|b| (b - &adj).is_zero()) {
            basis.push(adj);
            images.push(images[i].adjoint());
        }
    }
    let n = images[0].nrows();
    let one = FreePoly::one(&q.sig);
    if !basis.iter().any(|b| (b - &one).is_zero()) {
        basis.insert(0, one);
        images.insert(0, linalg::identity(n));
    }
    Ok(UcpMapSpec { basis, images })
}

fn hull_basis(p: &ProblemFile, q: &ModuleDescription) -> Result<Vec<FreePoly>> {
    if !p.basis.is_empty() {
        return p.basis.iter().map(|b| parse_poly(&q.sig, b)).collect();
    }
    if q.kind == ModuleKind::Heisenberg {
        return Ok(heisenberg::center_coordinates(&q.sig).to_vec());
    }
    Err(Error::InvalidInput("basis: required unless the module is the Heisenberg preset".into()))
}

fn hull(p: &ProblemFile, config: Value) -> Result<String> {
    let q = p.module()?;
    let basis = hull_basis(p, &q)?;
    let opts = p.params.certify_options()?;
    let d = p.params.d.unwrap_or(problem::DEFAULT_D);
    if let Some(k) = p.params.scan {
        if basis.len() != 2 {
            return Err(Error::InvalidInput(format!("scan: needs exactly two basis elements, got {}", basis.len())));
        }
        if k == 0 {
            return Err(Error::InvalidInput("scan: must be at least 1".into()));
        }
        let r = p.params.radius.unwrap_or(1.0);
        // Exact zeros on the axes keep the CSV free of rounding noise.
        let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        let rows = (0..k)
            .into_par_iter()
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                let x = [snap(r * t.cos()), snap(r * t.sin())];
                let out = certify::hull_project_membership(&x, &basis, &q, d, &opts)?;
                Ok(format!(
                    "{i},{},{},{},{}\n",
                    heisenberg::sig12(x[0]),
                    heisenberg::sig12(x[1]),
                    if out.inside { "inside_d" } else { "outside" },
                    heisenberg::sig12(out.value)
                ))
            })
            .collect::<Result<Vec<String>>>()?;
        let mut csv = String::from("index,x,y,status,value\n");
        csv.extend(rows);
        return Ok(csv);
    }
    let x = p.point.as_ref().ok_or_else(|| Error::InvalidInput("point: required unless scan is set".into()))?;
    let out = certify::hull_project_membership(x, &basis, &q, d, &opts)?;
    let label = format!("{x:?}");
    Ok(to_pretty(&json!({ "config": config, "result": Record::hull(&label, d, &out) })))
}

/// Fills defaults into `p` and executes it, returning the text `run` would
/// print. Thread caps in `params.jobs` are ignored here.
pub fn execute_problem(mut p: ProblemFile) -> Result<String> {
    p.params = p.params.resolve(p.query);
    execute(&p)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn run_parsed(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if let Command::Presets = cli.command {
        for (name, about) in preset_names() {
            let _ = writeln!(out, "{name:<16} {about}");
        }
        return Ok(());
    }
    let p = resolve(&cli.command)?;
    let jobs = p.params.jobs.unwrap_or(0);
    let text = if jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("jobs: {e}")))?;
        pool.install(|| execute(&p))?
    } else {
        execute(&p)?
    };
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INPUT
                }
            };
        }
    };
    match run_parsed(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["qmcert"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn matrix_text() {
        let m = parse_matrix("0.5 0; 0,1-2i").unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(m[(1, 1)], Complex64::new(1.0, -2.0));
        assert!(parse_matrix("1 2; 3").is_err());
    }

    #[test]
    fn presets_listed() {
        let (code, out, _) = call(&["presets"]);
        assert_eq!(code, 0);
        assert!(out.contains("free_group:n"));
        assert!(out.contains("heisenberg"));
    }

    #[test]
    fn input_errors_exit_2() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_INPUT);
        let (code, _, err) = call(&["norm", "--preset", "nope:3", "--poly", "z"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("nope"), "{err}");
        let (code, _, err) = call(&["norm", "--preset", "free_group:1"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("poly"), "{err}");
    }

    #[test]
    fn dilation_of_a_scalar() {
        let (code, out, _) = call(&["dilate", "--matrix", "0.6"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["result"]["unitarity_residual"].as_f64().unwrap() < 1e-12);
        assert_eq!(v["config"]["matrix"], "0.6");
        assert_eq!(v["config"]["params"]["seed"], 0);
    }
}
