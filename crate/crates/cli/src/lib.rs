//! Command-line front end for `svoc`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use svoc_core::optimality::{second_order_analysis, Verdict};
use svoc_core::oracle::{
    confirm_descent, convergence_study, fd_expansion_check, variational_fd_check, DescentCheck,
    DEFAULT_DELTAS,
};
use svoc_core::report::{csv_string, format_number, to_json_string, write_json, write_trajectory_csv};
use svoc_core::{
    builtin_problem, detect_singular, evaluate_cost, hamiltonian_fields, load_problem_file,
    make_grid, solve_adjoint, CostBreakdown, Error, Grid, ProblemSpec, ReferencePair,
    ScalarControl, Scheme, BUILTIN_PROBLEMS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable that overrides `--out`.
pub const OUT_DIR_ENV: &str = "SVOC_OUT_DIR";

/// Step used to confirm a violated second-order verdict.
const CONFIRM_DELTA: f64 = 1e-2;

#[derive(Parser, Debug)]
#[command(name = "svoc", version, about = "Optimality checks for weakly singular Volterra control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the builtin problem registry.
    ListProblems,
    /// Solve the state equation and evaluate the cost.
    Solve(SolveArgs),
    /// Solve the adjoint equation.
    Adjoint(RunArgs),
    /// Check singularity and, with --order 2, the second-order condition.
    Check(CheckArgs),
    /// Finite-difference check of the cost expansion and variational equations.
    Verify(VerifyArgs),
    /// Convergence study against the Mittag-Leffler solution.
    Converge(ConvergeArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Builtin problem name or path to a JSON problem file.
    #[arg(long)]
    problem: String,
    /// Problem parameter `name=value` (builtins only), may be repeated.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Reference control as an expression in t.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    control: String,
    /// Number of grid cells.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Output directory (overridden by SVOC_OUT_DIR).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    LeftRectangle,
    ProductTrapezoid,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "left-rectangle")]
    scheme: SchemeArg,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    /// Tolerance for the singularity and eigenvalue tests.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Direction of the variation as an expression in t.
    #[arg(long, allow_hyphen_values = true)]
    direction: String,
    /// Decreasing step sizes.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELTAS.to_vec())]
    deltas: Vec<f64>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![256, 512, 1024, 2048, 4096])]
    ns: Vec<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Serialize, Debug, Default)]
pub struct RunReport {
    pub command: String,
    pub problem: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub n: Option<usize>,
    pub cost: Option<CostBreakdown>,
    pub sup_abs_h_u: Option<f64>,
    pub singular: Option<bool>,
    pub second_order_verdict: Option<Verdict>,
    pub lambda_max: Option<f64>,
    pub files: Vec<String>,
    pub elapsed_seconds: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    match execute(cli.command) {
        Ok(Some(mut report)) => {
            report.elapsed_seconds = started.elapsed().as_secs_f64();
            match to_json_string(&report) {
                Ok(s) => {
                    print!("{s}");
                    EXIT_OK
                }
                Err(e) => fail(Failure::Core(e)),
            }
        }
        Ok(None) => EXIT_OK,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> i32 {
    match f {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Failure::Core(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn execute(command: Command) -> Outcome<Option<RunReport>> {
    match command {
        Command::ListProblems => {
            for (name, description) in BUILTIN_PROBLEMS {
                println!("{name:<14} {description}");
            }
            Ok(None)
        }
        Command::Solve(args) => solve(args).map(Some),
        Command::Adjoint(args) => adjoint(args).map(Some),
        Command::Check(args) => check(args).map(Some),
        Command::Verify(args) => verify(args).map(Some),
        Command::Converge(args) => converge(args).map(Some),
    }
}

fn parse_params(raw: &[String]) -> Outcome<BTreeMap<String, f64>> {
    let mut params = BTreeMap::new();
    for item in raw {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("parameter '{item}' is not of the form name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("parameter '{name}' has a non-numeric value")))?;
        if params.insert(name.trim().to_string(), value).is_some() {
            return Err(Failure::Usage(format!("parameter '{name}' given twice")));
        }
    }
    Ok(params)
}

fn load_problem(name: &str, raw_params: &[String]) -> Outcome<(ProblemSpec, BTreeMap<String, f64>)> {
    let params = parse_params(raw_params)?;
    let is_builtin = BUILTIN_PROBLEMS.iter().any(|(n, _)| *n == name);
    if !is_builtin && (name.ends_with(".json") || Path::new(name).is_file()) {
        if !params.is_empty() {
            return Err(Failure::Usage("--param applies to builtin problems only".into()));
        }
        return Ok((load_problem_file(name)?, params));
    }
    Ok((builtin_problem(name, &params)?, params))
}

fn out_dir(flag: &Path) -> Outcome<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| flag.to_path_buf());
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    Ok(dir)
}

/// A prepared run: problem, grid, reference control and output directory.
struct Setup {
    problem: ProblemSpec,
    grid: Grid,
    control: ScalarControl,
    out: PathBuf,
    report: RunReport,
}

impl Setup {
    fn new(command: &str, args: &RunArgs) -> Outcome<Self> {
        let (problem, params) = load_problem(&args.problem, &args.params)?;
        let grid = make_grid(problem.horizon(), args.n)?;
        let control = ScalarControl::parse(&args.control)?;
        let out = out_dir(&args.out)?;
        let report = RunReport {
            command: command.to_string(),
            problem: Some(problem.label().to_string()),
            params,
            n: Some(args.n),
            ..RunReport::default()
        };
        Ok(Self {
            problem,
            grid,
            control,
            out,
            report,
        })
    }

    fn pair(&self) -> Outcome<ReferencePair> {
        let u = self.control.sample(&self.grid)?;
        Ok(ReferencePair::solve(&self.problem, u, &self.grid)?)
    }

    fn file(&mut self, name: &str) -> PathBuf {
        let path = self.out.join(name);
        self.report.files.push(path.display().to_string());
        path
    }
}

fn solve(args: SolveArgs) -> Outcome<RunReport> {
    let mut s = Setup::new("solve", &args.run)?;
    let scheme = match args.scheme {
        SchemeArg::LeftRectangle => Scheme::LeftRectangle,
        SchemeArg::ProductTrapezoid => Scheme::ProductTrapezoid,
    };
    let u = s.control.sample(&s.grid)?;
    let y = svoc_core::state::solve_state_with(&s.problem, &u, &s.grid, scheme)?;
    let cost = evaluate_cost(&s.problem, &y, &u, &s.grid)?;
    let state_path = s.file("state.csv");
    write_trajectory_csv(&state_path, &y)?;
    let cost_path = s.file("cost.json");
    write_json(&cost_path, &cost)?;
    s.report.cost = Some(cost);
    Ok(s.report)
}

fn adjoint(args: RunArgs) -> Outcome<RunReport> {
    let mut s = Setup::new("adjoint", &args)?;
    let pair = s.pair()?;
    let adj = solve_adjoint(&s.problem, &pair, &s.grid)?;
    let path = s.file("adjoint.csv");
    write_trajectory_csv(&path, &adj.psi)?;
    s.report.cost = Some(evaluate_cost(&s.problem, &pair.y, &pair.u, &s.grid)?);
    Ok(s.report)
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    cost: &'a CostBreakdown,
    singularity: &'a svoc_core::SingularityCheck,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct SecondOrderOutput<'a> {
    report: &'a svoc_core::SecondOrderReport,
    descent_check: Option<DescentCheck>,
}

fn check(args: CheckArgs) -> Outcome<RunReport> {
    if let Some(tol) = args.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Failure::Usage(format!("--tol must be a non-negative number, got {tol}")));
        }
    }
    let mut s = Setup::new("check", &args.run)?;
    let pair = s.pair()?;
    let cost = evaluate_cost(&s.problem, &pair.y, &pair.u, &s.grid)?;
    let warnings = s
        .problem
        .derivatives()
        .warnings
        .iter()
        .map(|w| w.to_string())
        .collect();

    if args.order == 1 {
        let adj = solve_adjoint(&s.problem, &pair, &s.grid)?;
        let fields = hamiltonian_fields(&s.problem, &pair, &adj, &s.grid)?;
        let singularity = detect_singular(&fields, args.tol.unwrap_or_else(|| fields.default_tol()));
        let path = s.file("check.json");
        write_json(&path, &CheckOutput { cost: &cost, singularity: &singularity, warnings })?;
        let h_u = s.file("h_u.csv");
        write_trajectory_csv(&h_u, &fields.h_u)?;
        s.report.sup_abs_h_u = Some(singularity.sup_abs_h_u);
        s.report.singular = Some(singularity.singular);
        s.report.cost = Some(cost);
        return Ok(s.report);
    }

    let analysis = second_order_analysis(&s.problem, &pair, &s.grid, args.tol)?;
    let report = &analysis.report;
    let path = s.file("check.json");
    write_json(&path, &CheckOutput { cost: &cost, singularity: &report.singularity, warnings })?;
    let h_u = s.file("h_u.csv");
    write_trajectory_csv(&h_u, &analysis.fields.h_u)?;
    s.report.sup_abs_h_u = Some(report.singularity.sup_abs_h_u);
    s.report.singular = Some(report.singularity.singular);
    s.report.cost = Some(cost);
    if report.singularity.singular {
        let descent_check = match &report.violating_direction {
            Some(v) => {
                let dir = s.file("direction.csv");
                write_trajectory_csv(&dir, v)?;
                Some(confirm_descent(&s.problem, &pair.u, v, CONFIRM_DELTA, &s.grid)?)
            }
            None => None,
        };
        let path = s.file("second_order.json");
        write_json(&path, &SecondOrderOutput { report, descent_check })?;
    }
    s.report.second_order_verdict = Some(report.verdict);
    s.report.lambda_max = Some(report.lambda_max);
    Ok(s.report)
}

fn verify(args: VerifyArgs) -> Outcome<RunReport> {
    let mut s = Setup::new("verify", &args.run)?;
    let direction = ScalarControl::parse(&args.direction)?;
    let pair = s.pair()?;
    let v_cells = direction.sample_midpoints(&s.grid)?;
    let expansion = fd_expansion_check(&s.problem, &pair.u, &v_cells, &args.deltas, &s.grid)?;
    let v_nodes = direction.sample(&s.grid)?;
    let variational = variational_fd_check(&s.problem, &pair, &v_nodes, &args.deltas, &s.grid)?;

    let path = s.file("expansion.json");
    write_json(&path, &expansion)?;
    let rows: Vec<Vec<String>> = expansion
        .rows
        .iter()
        .map(|r| {
            [r.delta, r.delta_j, r.first_order, r.second_order, r.residual]
                .into_iter()
                .map(format_number)
                .collect()
        })
        .collect();
    let path = s.file("expansion.csv");
    std::fs::write(
        &path,
        csv_string(&["delta", "delta_j", "first_order", "second_order", "residual"], &rows),
    )
    .map_err(Error::from)?;
    let path = s.file("variational.json");
    write_json(&path, &variational)?;
    s.report.cost = Some(evaluate_cost(&s.problem, &pair.y, &pair.u, &s.grid)?);
    Ok(s.report)
}

fn converge(args: ConvergeArgs) -> Outcome<RunReport> {
    if args.ns.is_empty() {
        return Err(Failure::Usage("--ns needs at least one grid size".into()));
    }
    let table = convergence_study(args.lambda, args.alpha, &args.ns)?;
    let out = out_dir(&args.out)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let order = if i == 0 {
                String::new()
            } else {
                format_number(table.orders[i - 1])
            };
            vec![
                r.n.to_string(),
                format_number(r.abs_error),
                format_number(r.rel_error),
                order,
            ]
        })
        .collect();
    let path = out.join("convergence.csv");
    std::fs::write(&path, csv_string(&["n", "abs_error", "rel_error", "order"], &rows))
        .map_err(Error::from)?;
    let mut params = BTreeMap::new();
    params.insert("lambda".to_string(), args.lambda);
    params.insert("alpha".to_string(), args.alpha);
    Ok(RunReport {
        command: "converge".into(),
        problem: Some("abel_linear".into()),
        params,
        files: vec![path.display().to_string()],
        ..RunReport::default()
    })
}
