//! Command-line front end. `run` returns the process exit code: 0 certified
//! (or success), 2 not certified, 1 error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certifier::{certify_detailed, CertifyConfig, NormChoice};
use crate::multiindex::{binomial, MonomialBasis};
use crate::oracle::{multistart_minimize, DEFAULT_SEED};
use crate::problem_io::{emit_report, format_polynomial, parse_point, parse_problem, PopProblem, ReportFormat, Verdict};

#[derive(Parser, Debug)]
#[command(name = "popcert", version, about = "Global optimality certificates for polynomial optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check whether a feasible point is a global minimizer
    Certify(CertifyArgs),
    /// Print problem dimensions, constraints and the monomial basis
    Inspect(InspectArgs),
    /// Multistart local search to label local and global minima
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Norm {
    L1,
    L2,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    problem: PathBuf,
    /// `name=value,...`, a JSON object, or a file holding either
    #[arg(long)]
    point: String,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, value_enum, default_value = "both")]
    norm: Norm,
    #[arg(long, default_value_t = 1e-4)]
    tol_cert: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_feas: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol_comp: f64,
    #[arg(long)]
    max_minor_order: Option<usize>,
    #[arg(long)]
    scale_rows: bool,
    /// Write the assembled system as CSV
    #[arg(long, value_name = "PATH")]
    dump_kkt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    order: Option<u32>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 100)]
    starts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

fn load_problem(path: &Path) -> Result<PopProblem, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_problem(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn point_text(spec: &str) -> Result<String, String> {
    let t = spec.trim();
    if t.starts_with('{') || t.contains('=') {
        Ok(spec.to_string())
    } else {
        std::fs::read_to_string(t).map_err(|e| format!("cannot read point file {t}: {e}"))
    }
}

fn certify_cmd(args: &CertifyArgs, out: &mut dyn Write) -> Result<i32, String> {
    let problem = load_problem(&args.problem)?;
    let point = parse_point(&point_text(&args.point)?, &problem).map_err(|e| e.to_string())?;
    let config = CertifyConfig {
        order: args.order,
        norm: match args.norm {
            Norm::L1 => NormChoice::L1,
            Norm::L2 => NormChoice::L2,
            Norm::Both => NormChoice::Both,
        },
        tol_feas: args.tol_feas,
        tol_comp: args.tol_comp,
        tol_cert: args.tol_cert,
        max_minor_order: args.max_minor_order,
        scale_rows: args.scale_rows,
    };
    let result = certify_detailed(&problem, &point.values, &config).map_err(|e| e.to_string())?;
    if let Some(path) = &args.dump_kkt {
        std::fs::write(path, result.system.to_csv()).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let format = match args.output {
        Output::Json => ReportFormat::Json,
        Output::Text => ReportFormat::Text,
    };
    let mut text = emit_report(&result.report, format);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(match result.report.verdict {
        Verdict::Certified => 0,
        Verdict::NotCertified => 2,
    })
}

fn inspect_cmd(args: &InspectArgs, out: &mut dyn Write) -> Result<i32, String> {
    let problem = load_problem(&args.problem)?;
    let n = problem.nvars();
    let dmin = problem.min_order();
    let d = args.order.unwrap_or_else(|| problem.default_order());
    if d < dmin {
        return Err(format!("relaxation order {d} is below the minimum order {dmin}"));
    }
    let ni: Vec<usize> = problem
        .constraints
        .iter()
        .map(|g| binomial(n + (d - g.half_degree().unwrap_or(0)) as usize, n))
        .collect();
    let mut s = String::new();
    s.push_str(&format!("problem    {}\n", problem.name));
    s.push_str(&format!("variables  {} ({})\n", n, problem.variables.join(", ")));
    s.push_str(&format!("n          {n}\n"));
    s.push_str(&format!("d_min      {dmin}\n"));
    s.push_str(&format!("order      {d}\n"));
    s.push_str(&format!("n0         {}\n", binomial(n + d as usize, n)));
    s.push_str(&format!("ni         {ni:?}\n"));
    s.push_str(&format!("objective  {}\n", format_polynomial(&problem.objective, &problem.variables)));
    s.push_str(&format!("constraints ({})\n", problem.constraints.len()));
    for (i, g) in problem.constraints.iter().enumerate() {
        s.push_str(&format!(
            "  g{:<3} {} >= 0    # line {}\n",
            i + 1,
            format_polynomial(g, &problem.variables),
            problem.provenance[i].line
        ));
    }
    let basis = MonomialBasis::new(n, d);
    let mono: Vec<String> = basis.iter().map(ToString::to_string).collect();
    s.push_str(&format!("basis ({})  {}\n", basis.len(), mono.join(" ")));
    out.write_all(s.as_bytes()).map_err(|e| e.to_string())?;
    Ok(0)
}

#[derive(Serialize)]
struct OracleReport<'a> {
    problem: &'a str,
    seed: u64,
    starts: usize,
    best_point: &'a [f64],
    best_value: f64,
    basins: Vec<BasinRow<'a>>,
}

#[derive(Serialize)]
struct BasinRow<'a> {
    point: &'a [f64],
    value: f64,
}

fn oracle_cmd(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, String> {
    let problem = load_problem(&args.problem)?;
    let outcome = multistart_minimize(&problem, args.starts, args.seed).map_err(|e| e.to_string())?;
    let text = match args.output {
        Output::Json => {
            let report = OracleReport {
                problem: &problem.name,
                seed: args.seed,
                starts: args.starts,
                best_point: &outcome.best_point,
                best_value: outcome.best_value,
                basins: outcome.basins.iter().map(|b| BasinRow { point: &b.point, value: b.value }).collect(),
            };
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Output::Text => {
            let mut s = format!("problem {}  ({} starts, seed {})\n", problem.name, args.starts, args.seed);
            for b in &outcome.basins {
                let coords: Vec<String> = b.point.iter().map(|v| format!("{v:.6}")).collect();
                let tie = 1e-6 * (1.0 + outcome.best_value.abs());
                let label = if b.value - outcome.best_value <= tie { "global" } else { "local" };
                s.push_str(&format!("{label:<7} f = {:<14.6} x = ({})\n", b.value, coords.join(", ")));
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(0)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let result = match &cli.command {
        Command::Certify(a) => certify_cmd(a, out),
        Command::Inspect(a) => inspect_cmd(a, out),
        Command::Oracle(a) => oracle_cmd(a, out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}
