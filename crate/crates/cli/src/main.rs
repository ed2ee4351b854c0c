//! `vgreens`: causal Green's functions and the problems built on them, from
//! the command line.

mod format;
mod input;

use clap::{Args, Parser, Subcommand, ValueEnum};
use format::{complex, g17, num, render_json, Output, Sample, Table};
use input::{parse_alphas, parse_ops, parse_pairs, parse_reals, snap, CliError, Coefficients};
use serde_json::{Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use volterra_greens::suite::run_all;
use volterra_greens::{
    abel_wronskian, build_greens, compose, constant_coeff_greens, factored_greens, fundamental_solutions, make_grid,
    solve_ivp, sturm_liouville_greens, wronskian_samples, ConstCoeffKernel, DifferentialOperator, GridFunction,
    GridSpec, InitialConditions, SeriesOptions,
};

#[derive(Parser, Debug)]
#[command(name = "vgreens", version, about = "Causal Green's functions of linear ODE operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Left end of the interval.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    /// Right end of the interval.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
    /// Number of grid intervals (even).
    #[arg(long, default_value_t = 400)]
    n: usize,
}

#[derive(Args, Debug, Clone)]
struct SeriesArgs {
    /// Stopping tolerance of the resolvent series.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Maximum number of series terms.
    #[arg(long, default_value_t = 60)]
    max_terms: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Causal Green's function of `∂ⁿ + P_{n-1}∂ⁿ⁻¹ + ... + P_0`.
    Greens {
        /// Coefficients `P_0;P_1;...;P_{n-1}`.
        #[arg(long, allow_hyphen_values = true)]
        op: String,
        /// Report only at these `x,y` pairs, separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        eval_at: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Initial value problem `O y = g` with `∂ⁱy(a) = c_i`.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        op: String,
        /// Right-hand side `g(x)`.
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        rhs: String,
        /// Initial values `c_0,c_1,...,c_{n-1}`.
        #[arg(long, allow_hyphen_values = true)]
        ic: String,
        /// Report only at these grid points, separated by `,`.
        #[arg(long, allow_hyphen_values = true)]
        eval_at_x: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fundamental solutions with the determinant and Abel Wronskians.
    Fundamental {
        #[arg(long, allow_hyphen_values = true)]
        op: String,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Dirichlet Green's function of `∂² - P` on `[a, b]`.
    Sturm {
        /// The potential `P(x)`.
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        eval_at: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Green's function of the product `left · right` by kernel composition.
    Compose {
        #[arg(long, allow_hyphen_values = true)]
        left: String,
        #[arg(long, allow_hyphen_values = true)]
        right: String,
        /// Compare against a direct build of `--expect-op`.
        #[arg(long, requires = "expect_op")]
        verify: bool,
        /// Expanded coefficients of the product, as for `--op`.
        #[arg(long, allow_hyphen_values = true)]
        expect_op: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        eval_at: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Constant coefficients `α_0 + α_1∂ + ... + α_n∂ⁿ` (complex allowed).
    ConstCoeff {
        /// `α_0,α_1,...,α_n`; entries such as `2`, `-i` or `1-0.5i`.
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        #[arg(long, allow_hyphen_values = true)]
        eval_at: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Green's function of `(∂ - p_1)(∂ - p_2)...(∂ - p_n)`.
    Factored {
        /// `p_1;p_2;...;p_n`.
        #[arg(long, allow_hyphen_values = true)]
        ps: String,
        #[arg(long, allow_hyphen_values = true)]
        eval_at: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the built-in acceptance suite.
    Check {
        /// Suite name: `acceptance`, or its alias `paper`.
        #[arg(long, default_value = "acceptance")]
        suite: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Greens { .. } => "greens",
            Command::Solve { .. } => "solve",
            Command::Fundamental { .. } => "fundamental",
            Command::Sturm { .. } => "sturm",
            Command::Compose { .. } => "compose",
            Command::ConstCoeff { .. } => "const-coeff",
            Command::Factored { .. } => "factored",
            Command::Check { .. } => "check",
        }
    }

    fn grid_args(&self) -> Option<&GridArgs> {
        match self {
            Command::Greens { grid, .. }
            | Command::Solve { grid, .. }
            | Command::Fundamental { grid, .. }
            | Command::Sturm { grid, .. }
            | Command::Compose { grid, .. }
            | Command::ConstCoeff { grid, .. }
            | Command::Factored { grid, .. } => Some(grid),
            Command::Check { .. } => None,
        }
    }

    fn out(&self) -> &OutputArgs {
        match self {
            Command::Greens { out, .. }
            | Command::Solve { out, .. }
            | Command::Fundamental { out, .. }
            | Command::Sturm { out, .. }
            | Command::Compose { out, .. }
            | Command::ConstCoeff { out, .. }
            | Command::Factored { out, .. }
            | Command::Check { out, .. } => out,
        }
    }
}

fn series_opts(s: &SeriesArgs) -> SeriesOptions {
    SeriesOptions {
        tol: s.tol,
        max_terms: s.max_terms,
    }
}

fn series_params(params: &mut Map<String, Value>, s: &SeriesArgs) {
    params.insert("tol".into(), num(s.tol));
    params.insert("max_terms".into(), Value::from(s.max_terms));
}

fn strings(v: &[String]) -> Value {
    Value::Array(v.iter().map(|s| Value::String(s.clone())).collect())
}

/// Samples of a kernel, either at requested pairs or on the whole grid.
///
/// `full` emits every pair; otherwise only `i ≥ j`, where a causal kernel
/// can be nonzero. `scalars` are extra named values reported alongside;
/// `complex_columns` gives the CSV separate `re` and `im` columns.
fn kernel_output(
    grid: &GridSpec,
    quantity: &str,
    eval_at: Option<&str>,
    full: bool,
    complex_columns: bool,
    value: impl Fn(usize, usize) -> Sample,
    scalars: Vec<(&str, Sample)>,
    params: Map<String, Value>,
) -> Result<Output, CliError> {
    let mut header = vec!["quantity", "x", "y"];
    if complex_columns {
        header.extend(["re", "im"]);
    } else {
        header.push("value");
    }
    let mut table = Table::new(&header);
    let mut results = Map::new();
    for (name, v) in &scalars {
        results.insert(name.to_string(), v.json());
        let mut row = vec![name.to_string(), String::new(), String::new()];
        row.extend(v.csv_cells(complex_columns));
        table.rows.push(row);
    }
    let mut push_row = |x: f64, y: f64, v: Sample| {
        let mut row = vec![quantity.to_string(), g17(x), g17(y)];
        row.extend(v.csv_cells(complex_columns));
        table.rows.push(row);
    };
    match eval_at {
        Some(src) => {
            let mut pairs = Vec::new();
            for (x, y) in parse_pairs(src)? {
                let (i, j) = (snap(grid, x)?, snap(grid, y)?);
                let v = if full || i >= j {
                    value(i, j)
                } else {
                    Sample::Real(0.0)
                };
                push_row(x, y, v);
                let mut m = Map::new();
                m.insert("x".into(), num(x));
                m.insert("y".into(), num(y));
                m.insert("value".into(), v.json());
                pairs.push(Value::Object(m));
            }
            results.insert("pairs".into(), Value::Array(pairs));
        }
        None => {
            let n = grid.n_nodes();
            let mut data = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let v = if full || i >= j {
                        value(i, j)
                    } else {
                        Sample::Real(0.0)
                    };
                    if full || i >= j {
                        push_row(grid.node(i), grid.node(j), v);
                    }
                    data.push(v.json());
                }
            }
            let mut m = Map::new();
            m.insert("rows".into(), Value::from(n));
            m.insert("cols".into(), Value::from(n));
            m.insert("data".into(), Value::Array(data));
            results.insert("matrix".into(), Value::Object(m));
        }
    }
    Ok(Output { params, results, table })
}

/// Named grid functions, optionally restricted to some nodes.
fn functions_output(
    grid: &GridSpec,
    columns: Vec<(String, Vec<f64>)>,
    at: Option<Vec<usize>>,
    params: Map<String, Value>,
) -> Output {
    let rows: Vec<usize> = at.unwrap_or_else(|| (0..grid.n_nodes()).collect());
    let mut all = vec![("x".to_string(), grid.nodes().to_vec())];
    all.extend(columns);
    let header: Vec<&str> = all.iter().map(|c| c.0.as_str()).collect();
    let mut table = Table::new(&header);
    for &i in &rows {
        table.rows.push(all.iter().map(|c| g17(c.1[i])).collect());
    }
    let functions = all
        .iter()
        .map(|(name, v)| {
            let mut m = Map::new();
            m.insert("name".into(), Value::String(name.clone()));
            m.insert("values".into(), Value::Array(rows.iter().map(|&i| num(v[i])).collect()));
            Value::Object(m)
        })
        .collect();
    let mut results = Map::new();
    results.insert("functions".into(), Value::Array(functions));
    Output { params, results, table }
}

fn operator(src: &str, grid: &GridSpec, what: &str) -> Result<(Vec<String>, DifferentialOperator), CliError> {
    let parts = parse_ops(src, what)?;
    let op = DifferentialOperator::new(Coefficients::compile(&parts, grid, what)?.into_coeffs())?;
    Ok((parts, op))
}

fn run(cmd: &Command) -> Result<Output, CliError> {
    let grid = match cmd.grid_args() {
        Some(g) => Some(make_grid(g.a, g.b, g.n)?),
        None => None,
    };
    let mut params = Map::new();
    match cmd {
        Command::Greens { op, eval_at, series, .. } => {
            let grid = grid.expect("grid command");
            let (parts, op) = operator(op, &grid, "--op")?;
            params.insert("op".into(), strings(&parts));
            series_params(&mut params, series);
            let g = build_greens(&op, &grid, &series_opts(series))?;
            let t = g.kernel();
            let mut scalars = Vec::new();
            if let Some(s) = g.series_stats() {
                scalars.push(("series_terms", Sample::Real(s.terms_used as f64)));
                scalars.push(("last_term_norm", Sample::Real(s.last_term_norm)));
            }
            kernel_output(&grid, "T", eval_at.as_deref(), false, false, |i, j| Sample::Real(t.get(i, j)), scalars, params)
        }
        Command::Solve { op, rhs, ic, eval_at_x, .. } => {
            let grid = grid.expect("grid command");
            let (parts, op) = operator(op, &grid, "--op")?;
            let rhs_fn = Coefficients::compile(std::slice::from_ref(rhs), &grid, "--rhs")?;
            let g = GridFunction::new(&grid, rhs_fn.sample(0, &grid))?;
            let c = parse_reals(ic, "--ic")?;
            params.insert("op".into(), strings(&parts));
            params.insert("rhs".into(), Value::String(rhs.clone()));
            params.insert("ic".into(), Value::Array(c.iter().map(|&v| num(v)).collect()));
            let sol = solve_ivp(&op, &g, &InitialConditions::new(c, grid.a()))?;
            let at = match eval_at_x {
                Some(src) => {
                    let xs = parse_reals(src, "--eval-at-x")?;
                    params.insert("eval_at_x".into(), Value::Array(xs.iter().map(|&v| num(v)).collect()));
                    Some(xs.iter().map(|&x| snap(&grid, x)).collect::<Result<Vec<_>, _>>()?)
                }
                None => None,
            };
            let columns = sol
                .derivatives
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let name = if k == 0 { "y".to_string() } else { format!("d{k}y") };
                    (name, d.values().to_vec())
                })
                .collect();
            Ok(functions_output(&grid, columns, at, params))
        }
        Command::Fundamental { op, series, .. } => {
            let grid = grid.expect("grid command");
            let (parts, op) = operator(op, &grid, "--op")?;
            params.insert("op".into(), strings(&parts));
            series_params(&mut params, series);
            let g = build_greens(&op, &grid, &series_opts(series))?;
            let set = fundamental_solutions(&op, &g)?;
            let mut columns: Vec<(String, Vec<f64>)> = (0..set.degree())
                .map(|r| (format!("u{r}"), set.solution(r).values().to_vec()))
                .collect();
            columns.push(("wronskian_det".into(), wronskian_samples(&set)?.into_values()));
            columns.push(("wronskian_abel".into(), abel_wronskian(&op, &grid)?.into_values()));
            Ok(functions_output(&grid, columns, None, params))
        }
        Command::Sturm { p, eval_at, series, grid: ga, .. } => {
            let grid = grid.expect("grid command");
            let pc = Coefficients::compile(std::slice::from_ref(p), &grid, "--p")?;
            params.insert("p".into(), Value::String(p.clone()));
            series_params(&mut params, series);
            let s = sturm_liouville_greens(&pc.into_coeffs()[0], ga.a, ga.b, ga.n, &series_opts(series))?;
            let scalars = vec![("w_const", Sample::Real(s.w_const))];
            kernel_output(&grid, "G", eval_at.as_deref(), true, false, |i, j| Sample::Real(s.g(i, j)), scalars, params)
        }
        Command::Compose { left, right, verify, expect_op, eval_at, series, .. } => {
            let grid = grid.expect("grid command");
            let (lp, lop) = operator(left, &grid, "--left")?;
            let (rp, rop) = operator(right, &grid, "--right")?;
            params.insert("left".into(), strings(&lp));
            params.insert("right".into(), strings(&rp));
            series_params(&mut params, series);
            let opts = series_opts(series);
            let gl = build_greens(&lop, &grid, &opts)?;
            let gr = build_greens(&rop, &grid, &opts)?;
            // (L R)⁻¹ = R⁻¹ L⁻¹: the kernel of R sits next to x
            let c = compose(&gr, &gl)?;
            let mut scalars = Vec::new();
            if *verify {
                let src = expect_op.as_deref().expect("clap enforces --expect-op");
                let (ep, eop) = operator(src, &grid, "--expect-op")?;
                if eop.degree() != c.degree() {
                    return Err(CliError::new(
                        "invalid_argument",
                        format!(
                            "--expect-op has degree {} but the product has degree {}",
                            eop.degree(),
                            c.degree()
                        ),
                    ));
                }
                params.insert("expect_op".into(), strings(&ep));
                let direct = build_greens(&eop, &grid, &opts)?;
                let dev = c.kernel().max_abs_diff(direct.kernel())?;
                scalars.push(("deviation", Sample::Real(dev)));
            }
            let t = c.kernel();
            kernel_output(&grid, "T", eval_at.as_deref(), false, false, |i, j| Sample::Real(t.get(i, j)), scalars, params)
        }
        Command::ConstCoeff { alphas, eval_at, .. } => {
            let grid = grid.expect("grid command");
            let a = parse_alphas(alphas)?;
            params.insert("alphas".into(), Value::Array(a.iter().map(|&z| complex(z)).collect()));
            let cc = constant_coeff_greens(&a, &grid)?;
            let scalars: Vec<(&str, Sample)> = cc.roots.iter().map(|&r| ("root", Sample::Complex(r))).collect();
            let roots = Value::Array(cc.roots.iter().map(|&r| complex(r)).collect());
            let mut out = match &cc.greens {
                ConstCoeffKernel::Real(g) => {
                    let t = g.kernel();
                    kernel_output(&grid, "T", eval_at.as_deref(), false, true, |i, j| Sample::Real(t.get(i, j)), scalars, params)?
                }
                ConstCoeffKernel::Complex(g) => {
                    let t = g.kernel();
                    kernel_output(&grid, "T", eval_at.as_deref(), false, true, |i, j| Sample::Complex(t.get(i, j)), scalars, params)?
                }
            };
            out.results.remove("root");
            out.results.insert("roots".into(), roots);
            Ok(out)
        }
        Command::Factored { ps, eval_at, .. } => {
            let grid = grid.expect("grid command");
            let parts = parse_ops(ps, "--ps")?;
            params.insert("ps".into(), strings(&parts));
            let coeffs = Coefficients::compile(&parts, &grid, "--ps")?.into_coeffs();
            let g = factored_greens(&coeffs, &grid)?;
            let t = g.kernel();
            kernel_output(&grid, "T", eval_at.as_deref(), false, false, |i, j| Sample::Real(t.get(i, j)), Vec::new(), params)
        }
        Command::Check { suite, .. } => {
            if suite != "paper" && suite != "acceptance" {
                return Err(CliError::new(
                    "invalid_argument",
                    format!("unknown suite `{suite}` (expected `acceptance` or `paper`)"),
                ));
            }
            params.insert("suite".into(), Value::String(suite.clone()));
            let reports = run_all();
            let mut table = Table::new(&["id", "status", "name", "detail"]);
            let mut list = Vec::new();
            for r in &reports {
                let status = if r.passed { "PASS" } else { "FAIL" };
                table.rows.push(vec![r.id.clone(), status.into(), csv_quote(&r.name), csv_quote(&r.detail)]);
                let mut m = Map::new();
                m.insert("id".into(), Value::String(r.id.clone()));
                m.insert("name".into(), Value::String(r.name.clone()));
                m.insert("passed".into(), Value::Bool(r.passed));
                m.insert("detail".into(), Value::String(r.detail.clone()));
                list.push(Value::Object(m));
            }
            let mut results = Map::new();
            results.insert("criteria".into(), Value::Array(list));
            Ok(Output { params, results, table })
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit_error(e: &CliError) -> ExitCode {
    let mut m = Map::new();
    m.insert("code".into(), Value::String(e.code.clone()));
    m.insert("message".into(), Value::String(e.message.replace('\n', " ")));
    eprintln!("{}", Value::Object(m));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let message = first.trim_start_matches("error: ").to_string();
            return emit_error(&CliError::new("usage", message));
        }
    };
    let cmd = &cli.command;
    let out = match run(cmd) {
        Ok(o) => o,
        Err(e) => return emit_error(&e),
    };
    let args = cmd.out();
    let text = match args.format {
        Format::Csv => out.table.render(),
        Format::Json => render_json(cmd.name(), cmd.grid_args().map(|g| (g.a, g.b, g.n)), &out),
    };
    let written = match &args.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::new("io_error", format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::new("io_error", e.to_string()))
        }
    };
    if let Err(e) = written {
        return emit_error(&e);
    }
    if let Command::Check { .. } = cmd {
        let failed: Vec<&str> = out.results["criteria"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|c| c["passed"] == Value::Bool(false))
            .filter_map(|c| c["id"].as_str())
            .collect();
        if !failed.is_empty() {
            return emit_error(&CliError::new(
                "check_failed",
                format!("criteria failed: {}", failed.join(", ")),
            ));
        }
    }
    ExitCode::SUCCESS
}
