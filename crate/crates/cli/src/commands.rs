use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qualpert_core::esqm::{homotopy_run, run_esqm, LevelStatus};
use qualpert_core::model::FAMILIES;
use qualpert_core::qualification::{check_mfcq_hull, check_mfcq_lp, sweep_mfcq, SweepConfig};
use qualpert_core::scanner::{milnor_thom_bound, scan_singular_with, ScanConfig};
use qualpert_core::{
    catalog, CatalogParams, EsqmParams, MfcqCertificate, MfcqTolerances, PerturbationSpec,
    ProblemInstance, Verdict,
};

use crate::document::{parse_problem_file, DocumentError, ProblemDocument};

#[derive(Parser, Debug)]
#[command(
    name = "qualpert",
    version,
    about = "Qualification analysis of perturbed polynomial constraint sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Upper bound on the number of singular diagonal perturbations.
    Bound(BoundArgs),
    /// Certify MFCQ at a point, or on sampled boundary points.
    Mfcq(MfcqArgs),
    /// Enumerate singular diagonal levels in a window.
    Scan(ScanArgs),
    /// Solve one perturbed problem.
    Esqm(EsqmArgs),
    /// Solve a decreasing sequence of perturbed problems.
    Homotopy(HomotopyArgs),
    /// List the built-in families, or emit one as a problem document.
    Catalog(CatalogArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ProblemArgs {
    /// Built-in family name.
    #[arg(long, conflicts_with = "file")]
    pub problem: Option<String>,
    /// Problem document (JSON).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Dimension for `ball_box` and `grid_boxes`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Ball centre, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Option<Vec<f64>>,
    /// Grid degree for `grid_boxes`.
    #[arg(long)]
    pub d: Option<u32>,
    /// Disc separation for `tangent_discs`.
    #[arg(long)]
    pub gap: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here; JSON unless `--format csv` or a `.csv` name.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub r: u32,
    /// Read n, m, d, r off a family instead.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lp,
    Hull,
    Both,
}

#[derive(Args, Debug)]
pub struct MfcqArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Diagonal level.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu")]
    pub alpha: Option<f64>,
    /// Per-constraint bounds, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
    /// Point to certify, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "sweep"
    )]
    pub point: Option<Vec<f64>>,
    /// Sample boundary points instead of a single point.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-7)]
    pub tau_act: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub fail_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rank: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Level window `lo,hi` (upper end excluded).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub window: Vec<f64>,
    /// Random starts per activity pattern.
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub sigma_slack: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta_dedup: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// Starting point, comma separated; defaults to the sample box centre.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub curvature_obj: Option<f64>,
    #[arg(long)]
    pub curvature_con: Option<f64>,
    #[arg(long)]
    pub step_tol: Option<f64>,
    #[arg(long)]
    pub kkt_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Objective lower bound for the merit column.
    #[arg(long, allow_hyphen_values = true)]
    pub f_lower: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EsqmArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct HomotopyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Strictly decreasing positive levels, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub schedule: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CatalogArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Core(#[from] qualpert_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {0}: {1}")]
    Io(String, std::io::Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type Outcome = Result<bool, CliError>;

fn describe(family: &str) -> &'static str {
    match family {
        "cusp" => "two cubic constraints meeting in a cusp at the origin",
        "cusp_boxed" => "cusp with a half-plane making the feasible sets compact; objective -x1",
        "tangent_discs" => "two unit discs, tangent when gap = 0",
        "ball_box" => {
            "cube [-1,1]^n minus a ball around a; only the ball is perturbed; objective sum x"
        }
        "grid_boxes" => "d^n small boxes minus a ball around a; only the ball is perturbed",
        "interval_pair" => "1 - x^2 <= 0 and (x+1)^2 - 4 <= 0",
        _ => "",
    }
}

fn load(args: &ProblemArgs) -> Result<ProblemInstance, CliError> {
    match (&args.problem, &args.file) {
        (Some(name), None) => Ok(catalog(
            name,
            &CatalogParams {
                n: args.n,
                a: args.a.clone(),
                d: args.d,
                gap: args.gap,
            },
        )?),
        (None, Some(path)) => Ok(parse_problem_file(path)?),
        _ => Err(CliError::usage("pass exactly one of --problem or --file")),
    }
}

fn write_out(path: &PathBuf, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Io(path.display().to_string(), e))
}

/// Prints `text`, or the JSON/CSV rendering when asked; `--out` always gets
/// a machine-readable file.
fn emit(
    out: &mut dyn Write,
    args: &OutputArgs,
    text: &str,
    json: impl FnOnce() -> Result<String, CliError>,
    csv: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let io = |e| CliError::Io("stdout".into(), e);
    match &args.out {
        Some(path) => {
            let as_csv = args.format == Format::Csv
                || (args.format == Format::Text
                    && path
                        .extension()
                        .is_some_and(|e| e.eq_ignore_ascii_case("csv")));
            write_out(path, &if as_csv { csv() } else { json()? })?;
            writeln!(out, "{text}").map_err(io)?;
            writeln!(out, "wrote {}", path.display()).map_err(io)
        }
        None => match args.format {
            Format::Text => writeln!(out, "{text}").map_err(io),
            Format::Json => writeln!(out, "{}", json()?).map_err(io),
            Format::Csv => write!(out, "{}", csv()).map_err(io),
        },
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::usage(e.to_string()))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
    format!("({})", parts.join(", "))
}

fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        return format!("{x:.3e}");
    }
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn bound(args: &BoundArgs, out: &mut dyn Write) -> Outcome {
    let (n, m, d, r) = match (&args.problem, &args.file) {
        (None, None) => match (args.n, args.m, args.d) {
            (Some(n), Some(m), Some(d)) => (n, m, d, args.r),
            _ => {
                return Err(CliError::usage(
                    "bound needs --n, --m and --d (or --problem/--file)",
                ))
            }
        },
        _ => {
            let prob = load(&ProblemArgs {
                problem: args.problem.clone(),
                file: args.file.clone(),
                n: args.n.map(|v| v as usize),
                a: None,
                d: args.d,
                gap: None,
            })?;
            (
                prob.num_vars() as u32,
                prob.num_inequalities() as u32,
                prob.max_constraint_degree().max(1),
                prob.num_equalities() as u32,
            )
        }
    };
    let b = milnor_thom_bound(n, m, d, r)?;
    let json = serde_json::json!({"n": n, "m": m, "d": d, "r": r, "bound": b.to_string()});
    emit(
        out,
        &args.output,
        &b.to_string(),
        || to_json(&json),
        || format!("n,m,d,r,bound\n{n},{m},{d},{r},{b}\n"),
    )?;
    Ok(false)
}

fn certificate_line(c: &MfcqCertificate) -> String {
    let idx: Vec<String> = c
        .active_set
        .indices
        .iter()
        .map(|i| (i + 1).to_string())
        .collect();
    let mut s = format!(
        "{:?}: {:?}  margin {:.3e}  active {{{}}}",
        c.method,
        c.verdict,
        c.margin,
        idx.join(",")
    );
    if let Some(y) = &c.direction {
        s.push_str(&format!("  direction {}", fmt_vec(y)));
    }
    if c.verdict != Verdict::Holds && !c.lambda.is_empty() {
        s.push_str(&format!("  lambda {}", fmt_vec(&c.lambda)));
    }
    if let Some(r) = &c.reason {
        s.push_str(&format!("  ({r})"));
    }
    s
}

fn mfcq(args: &MfcqArgs, out: &mut dyn Write) -> Outcome {
    let prob = load(&args.problem)?;
    let pert = match (&args.alpha, &args.mu) {
        (Some(a), None) => PerturbationSpec::Diagonal(*a),
        (None, Some(mu)) => PerturbationSpec::Vector(mu.clone()),
        (None, None) => PerturbationSpec::Diagonal(0.0),
        _ => unreachable!("clap rejects --alpha with --mu"),
    };
    let tol = MfcqTolerances {
        tau_act: args.tau_act,
        tol: args.tol,
        fail_tol: args.fail_tol,
        tol_rank: args.tol_rank,
    };
    if args.sweep {
        let cfg = SweepConfig {
            samples: args.samples,
            seed: args.seed,
            tolerances: tol,
            with_hull: args.method != Method::Lp,
            ..Default::default()
        };
        let rep = sweep_mfcq(&prob, &pert, &cfg)?;
        let text = format!(
            "{}  seed {}  points {}/{}  holds {}  fails {}  degenerate {}  worst margin {:.3e}",
            prob.name(),
            rep.seed,
            rep.points.len(),
            rep.samples_requested,
            rep.holds,
            rep.fails,
            rep.degenerate,
            rep.worst_margin
        );
        emit(out, &args.output, &text, || to_json(&rep), || rep.to_csv())?;
        return Ok(rep.fails > 0);
    }
    let x = args
        .point
        .as_ref()
        .ok_or_else(|| CliError::usage("mfcq needs --point or --sweep"))?;
    let mut certs = Vec::new();
    if args.method != Method::Hull {
        certs.push(check_mfcq_lp(&prob, &pert, x, &tol)?);
    }
    if args.method != Method::Lp {
        certs.push(check_mfcq_hull(&prob, &pert, x, &tol)?);
    }
    let mut text = format!("{} at {}", prob.name(), fmt_vec(x));
    for c in &certs {
        text.push('\n');
        text.push_str(&certificate_line(c));
    }
    let csv = || {
        let mut s = String::from("method,verdict,margin,active_indices\n");
        for c in &certs {
            let idx: Vec<String> = c
                .active_set
                .indices
                .iter()
                .map(|i| (i + 1).to_string())
                .collect();
            s.push_str(&format!(
                "{:?},{:?},{:e},{}\n",
                c.method,
                c.verdict,
                c.margin,
                idx.join(";")
            ));
        }
        s
    };
    emit(out, &args.output, &text, || to_json(&certs), csv)?;
    Ok(certs.iter().any(|c| c.verdict == Verdict::Fails))
}

fn scan(args: &ScanArgs, out: &mut dyn Write) -> Outcome {
    let prob = load(&args.problem)?;
    let [lo, hi] = args.window[..] else {
        return Err(CliError::usage("--window takes two numbers: lo,hi"));
    };
    let cfg = ScanConfig {
        starts: args.starts,
        seed: args.seed,
        max_iter: args.max_iter,
        tol_residual: args.tol_residual,
        lambda_min: args.lambda_min,
        sigma_slack: args.sigma_slack,
        delta_dedup: args.delta_dedup,
        sample_box: None,
    };
    let rep = scan_singular_with(&prob, (lo, hi), &cfg)?;
    let mut text = format!(
        "{}  window [{lo}, {hi})  starts {}  seed {}  patterns {}\n{} singular values (bound {}):",
        rep.problem,
        rep.starts_used,
        rep.seed,
        rep.patterns,
        rep.singular_values.len(),
        rep.bound
    );
    for v in &rep.singular_values {
        let k: Vec<String> = v.witness.k.iter().map(|i| (i + 1).to_string()).collect();
        text.push_str(&format!(
            "\n  {:.12}  x {}  K {{{}}}  residual {:.2e}",
            v.alpha,
            fmt_vec(&v.witness.x),
            k.join(","),
            v.witness.residual_norm
        ));
    }
    if !rep.uncertain.is_empty() {
        text.push_str(&format!("\n{} uncertain:", rep.uncertain.len()));
        for w in &rep.uncertain {
            text.push_str(&format!("\n  {:.12}  x {}", w.alpha, fmt_vec(&w.x)));
        }
    }
    emit(
        out,
        &args.output,
        &text,
        || Ok(rep.to_json()?),
        || rep.to_csv(),
    )?;
    Ok(false)
}

fn solver_params(
    prob: &ProblemInstance,
    a: &SolverArgs,
    alpha: f64,
) -> Result<(EsqmParams, Vec<f64>), CliError> {
    let f = prob
        .objective()
        .ok_or_else(|| CliError::usage("the problem has no objective"))?;
    let base = EsqmParams::for_problem(prob, f, alpha)?;
    let p = EsqmParams {
        beta0: a.beta0.unwrap_or(base.beta0),
        delta: a.delta.unwrap_or(base.delta),
        curvature_obj: a.curvature_obj.unwrap_or(base.curvature_obj),
        curvature_con: a.curvature_con.unwrap_or(base.curvature_con),
        step_tol: a.step_tol.unwrap_or(base.step_tol),
        kkt_tol: a.kkt_tol.unwrap_or(base.kkt_tol),
        max_iter: a.max_iter.unwrap_or(base.max_iter),
        f_lower: a.f_lower,
        ..base
    };
    let x0 = a.x0.clone().unwrap_or_else(|| {
        prob.sample_box()
            .iter()
            .map(|&(l, h)| 0.5 * (l + h))
            .collect()
    });
    Ok((p, x0))
}

fn esqm(args: &EsqmArgs, out: &mut dyn Write) -> Outcome {
    let prob = load(&args.problem)?;
    let (params, x0) = solver_params(&prob, &args.solver, args.alpha)?;
    let f = prob.objective().expect("checked in solver_params");
    let t = run_esqm(&prob, f, &x0, &params)?;
    let text = format!(
        "{}  alpha {}  {:?} after {} iterations\nx {}  f {}  kkt {:.2e}  beta {} (settled at {})  retries {}",
        prob.name(),
        params.alpha,
        t.termination,
        t.step_norms.len(),
        fmt_vec(t.final_x()),
        f.eval(t.final_x()),
        t.final_kkt(),
        t.betas.last().expect("nonempty"),
        t.beta_settled_at(),
        t.retries
    );
    emit(out, &args.output, &text, || Ok(t.to_json()?), || t.to_csv())?;
    Ok(!t.converged())
}

fn homotopy(args: &HomotopyArgs, out: &mut dyn Write) -> Outcome {
    let prob = load(&args.problem)?;
    let first = *args
        .schedule
        .first()
        .ok_or_else(|| CliError::usage("empty --schedule"))?;
    let (params, x0) = solver_params(&prob, &args.solver, first)?;
    let f = prob.objective().expect("checked in solver_params");
    let h = homotopy_run(&prob, f, &x0, &args.schedule, &params)?;
    let mut text = format!("{}  {} levels", prob.name(), h.levels.len());
    for l in &h.levels {
        text.push_str(&format!(
            "\n  alpha {:e}  value {:.10}  {:?}  x {}",
            l.alpha,
            l.value,
            l.status,
            fmt_vec(&l.x)
        ));
    }
    emit(out, &args.output, &text, || to_json(&h), || h.to_csv())?;
    Ok(h.levels.iter().any(|l| l.status != LevelStatus::Solved))
}

fn catalog_cmd(args: &CatalogArgs, out: &mut dyn Write) -> Outcome {
    let io = |e| CliError::Io("stdout".into(), e);
    let Some(name) = &args.problem.problem else {
        for f in FAMILIES {
            writeln!(out, "{f:<14} {}", describe(f)).map_err(io)?;
        }
        return Ok(false);
    };
    let prob = load(&args.problem)?;
    let doc = ProblemDocument::from_instance(&prob, describe(name), "built-in catalog").to_json();
    match &args.out {
        Some(p) => write_out(p, &doc)?,
        None => writeln!(out, "{doc}").map_err(io)?,
    }
    Ok(false)
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Bound(a) => bound(a, out),
        Command::Mfcq(a) => mfcq(a, out),
        Command::Scan(a) => scan(a, out),
        Command::Esqm(a) => esqm(a, out),
        Command::Homotopy(a) => homotopy(a, out),
        Command::Catalog(a) => catalog_cmd(a, out),
    }
}
