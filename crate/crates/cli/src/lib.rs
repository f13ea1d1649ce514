//! Command-line front end: validation, evaluation and verification runs over
//! a problem file, each producing a JSON [`document::ResultDocument`].
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 validation failure,
//! 3 numerical budget exceeded, 4 property failure.

pub mod document;
pub mod problem;
pub mod verify;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use thetafock::geometry::RDQ_TOLERANCE;
use thetafock::quadrature::{build_grid, gram_matrix, Evaluable, GridOptions, QuadratureError};
use thetafock::theta::DEFAULT_MAX_RADIUS;
use thetafock::{PointCoordinates, SpaceConfig, SpaceError, ThetaError, ThetaOptions};

use document::{CommandEcho, ErrorReport, ResultDocument, Value};
use problem::{Diagnostic, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "THETAFOCK_THREADS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), if field.is_empty() { String::new() } else { format!(" in field `{field}`") })]
    Parse { line: Option<usize>, field: String, message: String },
    #[error("{}: {}", .0.invariant, .0.message)]
    Validation(Diagnostic),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Budget(_) => "numerical_budget",
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::Theta(t) => t.into(),
            SpaceError::Geometry(g) => CliError::Validation(problem::geometry_diagnostic(g)),
            SpaceError::Overflow { .. } => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ThetaError> for CliError {
    fn from(e: ThetaError) -> Self {
        match e {
            ThetaError::TailBoundUnreachable { .. } => CliError::Budget(e.to_string()),
            ThetaError::InvalidTolerance(_) | ThetaError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            other => CliError::Validation(Diagnostic { invariant: "theta".into(), message: other.to_string() }),
        }
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::Space(s) => s.into(),
            QuadratureError::InvalidNodeCount(_) => CliError::Usage(e.to_string()),
            other => CliError::Budget(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "thetafock", version, about = "Theta Fock-Bargmann spaces: validation, evaluation and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result document to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Geometry,
    Theta,
    Orthogonality,
    Reproducing,
    Bounds,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the hermitian form, isotropy, B and the character condition.
    Validate { problem: PathBuf },
    /// Evaluate Θ_{α,0}(z | (2πi/ν) B⁻¹).
    Theta {
        problem: PathBuf,
        /// One `re,im` value per lattice coordinate, or `@file.json`.
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Truncation radius limit in the Im F metric.
        #[arg(long)]
        max_radius: Option<f64>,
    },
    /// Evaluate the reproducing kernel K(u, v).
    Kernel {
        problem: PathBuf,
        /// g values `re,im` (ω-coordinates unless --ambient), or `@file.json`.
        #[arg(long, allow_hyphen_values = true)]
        u: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Vec<String>,
        /// Interpret u and v as ambient vectors in C^g.
        #[arg(long)]
        ambient: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Closed-form basis norms, optionally checked against quadrature.
    Norms {
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        n_max: i64,
        #[arg(long, default_value_t = 0)]
        k_max: u32,
        /// Compare against the quadrature oracle.
        #[arg(long)]
        oracle: bool,
        /// Quadrature nodes `compact,unbounded`.
        #[arg(long)]
        nodes: Option<String>,
        /// Relative tolerance for the oracle comparison.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a property suite with a fixed seed.
    Verify {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        nodes: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

impl Command {
    fn problem(&self) -> &Path {
        match self {
            Command::Validate { problem }
            | Command::Theta { problem, .. }
            | Command::Kernel { problem, .. }
            | Command::Norms { problem, .. }
            | Command::Verify { problem, .. } => problem,
        }
    }

    fn echo(&self) -> CommandEcho {
        let mut options = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            options.insert(k.to_string(), v);
        };
        let verb = match self {
            Command::Validate { .. } => "validate",
            Command::Theta { z, tol, max_radius, .. } => {
                put("z", z.join(" "));
                if let Some(t) = tol {
                    put("tol", format!("{t:e}"));
                }
                if let Some(m) = max_radius {
                    put("max_radius", m.to_string());
                }
                "theta"
            }
            Command::Kernel { u, v, ambient, tol, .. } => {
                put("u", u.join(" "));
                put("v", v.join(" "));
                put("ambient", ambient.to_string());
                if let Some(t) = tol {
                    put("tol", format!("{t:e}"));
                }
                "kernel"
            }
            Command::Norms { n_max, k_max, oracle, nodes, tol, .. } => {
                put("n_max", n_max.to_string());
                put("k_max", k_max.to_string());
                put("oracle", oracle.to_string());
                if let Some(n) = nodes {
                    put("nodes", n.clone());
                }
                if let Some(t) = tol {
                    put("tol", format!("{t:e}"));
                }
                "norms"
            }
            Command::Verify { suite, seed, nodes, tol, .. } => {
                put("suite", format!("{suite:?}").to_lowercase());
                put("seed", seed.to_string());
                if let Some(n) = nodes {
                    put("nodes", n.clone());
                }
                if let Some(t) = tol {
                    put("tol", format!("{t:e}"));
                }
                "verify"
            }
        };
        CommandEcho { verb: verb.to_string(), problem: self.problem().display().to_string(), options }
    }
}

/// Parses one complex number from `re,im` or `re`.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Usage(format!("cannot parse complex value `{s}` (expected re,im)"));
    let mut parts = s.split(',').map(str::trim);
    let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(p) => p.parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Complex vector from repeated flag values or a single `@file` holding a
/// JSON array of `[re, im]` pairs.
pub fn parse_vector(values: &[String]) -> Result<Vec<Complex64>, CliError> {
    if let [single] = values {
        if let Some(path) = single.strip_prefix('@') {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
            let pairs: Vec<[f64; 2]> = serde_json::from_str(&text)
                .map_err(|e| CliError::Parse { line: Some(e.line()), field: String::new(), message: e.to_string() })?;
            return Ok(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect());
        }
    }
    values.iter().map(|s| parse_complex(s)).collect()
}

/// `compact,unbounded` node counts over the defaults.
pub fn parse_nodes(arg: Option<&str>) -> Result<GridOptions, CliError> {
    let mut options = GridOptions::default();
    if let Some(s) = arg {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<usize>()
                .ok()
                .filter(|&n| n >= 2)
                .ok_or_else(|| CliError::Usage(format!("invalid node count `{p}` in --nodes {s}")))
        };
        match parts.as_slice() {
            [both] => {
                let n = parse(both)?;
                options.compact_nodes = n;
                options.unbounded_nodes = n;
            }
            [c, u] => {
                options.compact_nodes = parse(c)?;
                options.unbounded_nodes = parse(u)?;
            }
            _ => return Err(CliError::Usage(format!("--nodes expects `compact,unbounded`, got `{s}`"))),
        }
    }
    Ok(options)
}

fn check_len(what: &str, v: &[Complex64], expected: usize) -> Result<(), CliError> {
    if v.len() != expected {
        return Err(CliError::Usage(format!("{what} needs {expected} values, got {}", v.len())));
    }
    Ok(())
}

fn load_config(problem: &ProblemFile) -> Result<SpaceConfig, CliError> {
    problem.config().map_err(CliError::Validation)
}

fn point(config: &SpaceConfig, values: &[Complex64], ambient: bool, what: &str) -> Result<PointCoordinates, CliError> {
    check_len(what, values, config.g())?;
    if ambient {
        let v = thetafock::linalg::CVector::from_column_slice(values);
        Ok(config.lattice().coordinates(&v).map_err(|e| CliError::Validation(problem::geometry_diagnostic(e)))?)
    } else {
        Ok(PointCoordinates::from_full(values, config.r()))
    }
}

fn cmd_validate(problem: &ProblemFile, doc: &mut ResultDocument) -> Result<(), CliError> {
    let space = match problem.space() {
        Ok(s) => s,
        Err(d) => {
            doc.flag(d.invariant.clone(), false, Some(d.message.clone()));
            return Err(CliError::Validation(d));
        }
    };
    doc.flag("hermitian", true, None);
    doc.flag("positive_definite", true, None);
    let lattice = match thetafock::IsotropicLattice::new(space, problem.generators()) {
        Ok(l) => l,
        Err(e) => {
            let d = problem::geometry_diagnostic(e);
            doc.flag(d.invariant.clone(), false, Some(d.message.clone()));
            return Err(CliError::Validation(d));
        }
    };
    let mut worst_e: f64 = 0.0;
    for a in lattice.generators() {
        for b in lattice.generators() {
            worst_e = worst_e.max(lattice.space().symplectic_form(a, b).unwrap_or(f64::INFINITY).abs());
        }
    }
    doc.flag("independence", true, None);
    doc.push("max_abs_E_on_generators", Value::Real(worst_e));
    doc.flag("isotropy", true, None);
    doc.flag("b_positive_definite", true, None);
    doc.push("B", Value::real_matrix(lattice.b_matrix()));
    doc.push("det_B", Value::Real(lattice.b_determinant()));
    doc.push("B_inverse", Value::real_matrix(lattice.b_inverse()));
    let complement: Vec<Vec<[f64; 2]>> =
        lattice.complement().iter().map(|w| w.iter().map(|z| [z.re, z.im]).collect()).collect();
    doc.push("complement", Value::ComplexMatrix(complement));
    doc.push("measure_conversion_factor", Value::Real(lattice.measure_conversion_factor()));

    let character = thetafock::Character::new(&problem.alpha);
    let report = lattice
        .check_rdq(|m| character.value(m), problem.nu, 3)
        .map_err(|e| CliError::Validation(problem::geometry_diagnostic(e)))?;
    doc.push("alpha_normalized", Value::Reals(character.alpha().to_vec()));
    doc.check("rdq", report.max_defect, RDQ_TOLERANCE);
    if !(problem.nu > 0.0 && problem.nu.is_finite()) {
        let d = Diagnostic { invariant: "nu_positive".into(), message: format!("ν must be positive, got {}", problem.nu) };
        doc.flag("nu_positive", false, Some(d.message.clone()));
        return Err(CliError::Validation(d));
    }
    doc.flag("nu_positive", true, None);
    if !doc.pass {
        return Err(CliError::Validation(Diagnostic {
            invariant: "rdq".into(),
            message: format!("cocycle defect {:e}", report.max_defect),
        }));
    }
    Ok(())
}

fn cmd_theta(
    problem: &ProblemFile,
    z: &[String],
    tol: Option<f64>,
    max_radius: Option<f64>,
    doc: &mut ResultDocument,
) -> Result<(), CliError> {
    let config = load_config(problem)?;
    let z = parse_vector(z)?;
    check_len("--z", &z, config.r())?;
    let opts = ThetaOptions::new(tol.unwrap_or(problem.tolerances.eval))
        .with_max_radius(max_radius.unwrap_or(DEFAULT_MAX_RADIUS));
    let value = config.theta_parameters().evaluate(&z, &opts)?;
    doc.push("z", Value::complexes(&z));
    doc.push("theta", Value::complex(value.value));
    doc.push("tail_bound", Value::Real(value.tail_bound));
    doc.push("index_set_size", Value::Integer(value.terms as i64));
    doc.push("radius", Value::Real(value.radius));
    Ok(())
}

fn cmd_kernel(
    problem: &ProblemFile,
    u: &[String],
    v: &[String],
    ambient: bool,
    tol: Option<f64>,
    doc: &mut ResultDocument,
) -> Result<(), CliError> {
    let config = load_config(problem)?;
    let tol = tol.unwrap_or(problem.tolerances.eval);
    let pu = point(&config, &parse_vector(u)?, ambient, "--u")?;
    let pv = point(&config, &parse_vector(v)?, ambient, "--v")?;
    let kuv = config.kernel_eval(&pu, &pv, tol)?;
    let kvu = config.kernel_eval(&pv, &pu, tol)?;
    let du = config.kernel_diagonal(&pu, tol)?;
    let dv = config.kernel_diagonal(&pv, tol)?;
    doc.push("u", Value::complexes(&pu.full()));
    doc.push("v", Value::complexes(&pv.full()));
    doc.push("K(u,v)", Value::complex(kuv));
    doc.push("K(u,u)", Value::Real(du));
    doc.push("K(v,v)", Value::Real(dv));
    doc.check("hermitian_symmetry", (kuv - kvu.conj()).norm(), 2.0 * tol + 1e-13 * kuv.norm());
    let cs = (kuv.norm_sqr() - du * dv).max(0.0) / (du * dv);
    doc.check("cauchy_schwarz", cs, 1e-9);
    Ok(())
}

fn index_label(idx: &thetafock::BasisIndex) -> String {
    format!("n={:?},k={:?}", idx.n, idx.k)
}

fn cmd_norms(
    problem: &ProblemFile,
    n_max: i64,
    k_max: u32,
    oracle: bool,
    nodes: Option<&str>,
    tol: Option<f64>,
    doc: &mut ResultDocument,
) -> Result<(), CliError> {
    if n_max < 0 {
        return Err(CliError::Usage("--n-max must be nonnegative".into()));
    }
    let config = load_config(problem)?;
    let indices = config.basis_indices(n_max, k_max);
    let mut closed = Vec::with_capacity(indices.len());
    for idx in &indices {
        let log = config.basis_log_norm_sq(idx)?;
        doc.push(format!("log_norm_sq[{}]", index_label(idx)), Value::Real(log));
        let value = config.basis_norm_sq(idx)?;
        doc.push(format!("norm_sq[{}]", index_label(idx)), Value::Real(value));
        closed.push(value);
    }
    if oracle {
        let tol = tol.unwrap_or(1e-6);
        let grid = build_grid(&config, 1e-10, parse_nodes(nodes)?)?;
        let config = &config;
        let closures: Vec<_> = indices.iter().map(|idx| move |u: &PointCoordinates| config.basis_eval(idx, u)).collect();
        let functions: Vec<&Evaluable> = closures.iter().map(|f| f as &Evaluable).collect();
        let gram = gram_matrix(&grid, &functions)?;
        let mut diag: f64 = 0.0;
        let mut off: f64 = 0.0;
        for i in 0..indices.len() {
            doc.push(format!("oracle_norm_sq[{}]", index_label(&indices[i])), Value::Real(gram.matrix[(i, i)].re));
            diag = diag.max((gram.matrix[(i, i)].re - closed[i]).abs() / closed[i]);
            for j in 0..indices.len() {
                if i != j {
                    off = off.max(gram.matrix[(i, j)].norm() / (closed[i] * closed[j]).sqrt());
                }
            }
        }
        doc.push("oracle_nodes", Value::Integer(grid.node_count() as i64));
        doc.push("oracle_refinement_error", Value::Real(gram.max_relative_error()));
        doc.check("norms_match_oracle", diag, tol);
        doc.check("orthogonality", off, tol);
    }
    Ok(())
}

/// Runs one parsed command; always returns a document and an exit code.
pub fn execute(cli: &Cli) -> (ResultDocument, i32) {
    let start = Instant::now();
    let mut doc = ResultDocument::new(cli.command.echo());
    let outcome = (|| -> Result<(), CliError> {
        let problem = ProblemFile::load(cli.command.problem())?;
        doc.config_digest = Some(problem.digest());
        match &cli.command {
            Command::Validate { .. } => cmd_validate(&problem, &mut doc),
            Command::Theta { z, tol, max_radius, .. } => cmd_theta(&problem, z, *tol, *max_radius, &mut doc),
            Command::Kernel { u, v, ambient, tol, .. } => cmd_kernel(&problem, u, v, *ambient, *tol, &mut doc),
            Command::Norms { n_max, k_max, oracle, nodes, tol, .. } => {
                cmd_norms(&problem, *n_max, *k_max, *oracle, nodes.as_deref(), *tol, &mut doc)
            }
            Command::Verify { suite, seed, nodes, tol, .. } => {
                let config = load_config(&problem)?;
                let settings = verify::Settings {
                    seed: *seed,
                    grid: parse_nodes(nodes.as_deref())?,
                    tol: tol.unwrap_or(problem.tolerances.eval),
                };
                verify::run(&config, *suite, &settings, &mut doc)
            }
        }
    })();
    doc.timings.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    let code = match outcome {
        Ok(()) if doc.pass => EXIT_OK,
        Ok(()) => EXIT_PROPERTY,
        Err(e) => {
            doc.pass = false;
            let diagnostic = match &e {
                CliError::Validation(d) => Some(d.clone()),
                _ => None,
            };
            doc.error = Some(ErrorReport { kind: e.kind().into(), message: e.to_string(), diagnostic });
            e.exit_code()
        }
    };
    (doc, code)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
        // A second call in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let (doc, code) = execute(&cli);
    if let Some(err) = &doc.error {
        eprintln!("error: {}", err.message);
    }
    let text = doc.to_json();
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{text}"),
    }
    code
}
