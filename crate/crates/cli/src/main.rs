//! `mtl`: exact discrete optimal transport, cyclical monotonicity
//! certificates, convex potentials, ranks and consistency experiments.
//!
//! Exit codes: 0 success, 1 domain failure (JSON report on stdout),
//! 2 usage or input error (message on stderr).

mod load;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mtl_core::convergence::{run_consistency_experiment, ExperimentConfig};
use mtl_core::geometry::{directed_hausdorff, SetDescriptor};
use mtl_core::io::{format_float, from_json, to_canonical_json, CouplingDoc};
use mtl_core::monotone::{
    eval_subdifferential, is_cyclically_monotone, is_monotone, rockafellar_potential_with_tol, MaxAffinePotential,
    DEFAULT_TOL,
};
use mtl_core::ranks::{center_outward_grid, center_outward_ranks, ORIGIN_JITTER};
use mtl_core::transport::{coupling_support, solve_discrete_ot, SUPPORT_FLOOR};
use mtl_core::Error;

use load::{load_points, Expect, LoadError};

#[derive(Parser)]
#[command(name = "mtl", version, about = "Exact discrete optimal transport and cyclically monotone maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Certify that a pair set is cyclically monotone, or print a violating cycle.
    CheckMonotone {
        /// CSV with columns x_1..x_d, y_1..y_d, or JSON {"xs", "ys"}.
        pairs: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Check only pairwise monotonicity.
        #[arg(long)]
        pairwise: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Solve the optimal transport problem between two discrete measures.
    SolveOt {
        /// Source points, optionally with a weight column.
        source: PathBuf,
        /// Target points, optionally with a weight column.
        target: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        /// 0-based column holding relative masses.
        #[arg(long)]
        weights_col: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Build the convex potential extending a cyclically monotone pair set.
    Potential {
        pairs: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        /// Pair whose intercept anchors the potential.
        #[arg(long, default_value_t = 0)]
        base: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate the subdifferential of a potential at query points.
    EvalMap {
        /// Potential JSON, bare or as written by `potential`.
        potential: PathBuf,
        queries: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Hausdorff distance between two point clouds.
    Hausdorff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Center-outward ranks of a sample against a reference grid.
    Ranks {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        nr: usize,
        #[arg(long)]
        ns: usize,
        #[arg(long, default_value_t = 0)]
        n0: usize,
        /// Seeds the grid directions in dimension 3 and above.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Run a seeded Monte-Carlo consistency experiment.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Experiment report JSON.
        #[arg(long)]
        out: PathBuf,
        /// Long-format CSV, one row per (n, rep, metric).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lattice points of a set descriptor, or a center-outward grid.
    GenGrid {
        /// Set descriptor JSON.
        #[arg(long, requires = "resolution", conflicts_with_all = ["nr", "ns", "n0"])]
        set: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, requires_all = ["ns", "dim"], required_unless_present = "set")]
        nr: Option<usize>,
        #[arg(long)]
        ns: Option<usize>,
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckMonotone { .. } => "check-monotone",
            Command::SolveOt { .. } => "solve-ot",
            Command::Potential { .. } => "potential",
            Command::EvalMap { .. } => "eval-map",
            Command::Hausdorff { .. } => "hausdorff",
            Command::Ranks { .. } => "ranks",
            Command::Converge { .. } => "converge",
            Command::GenGrid { .. } => "gen-grid",
        }
    }
}

#[derive(Serialize)]
struct Header {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    /// `SOURCE_DATE_EPOCH` when set; omitted otherwise so reruns match.
    timestamp: Option<u64>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct RunReport {
    header: Header,
    body: Value,
    exit_code: u8,
}

enum Failure {
    /// Bad flags, unreadable or malformed input: exit 2.
    Usage(String),
    /// The library rejected the input: exit 1 with a JSON body.
    Domain(Value),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(error_body(&e))
    }
}

fn error_body(e: &Error) -> Value {
    let kind = match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::Empty(_) => "empty",
        Error::InvalidInput(_) => "invalid_input",
        Error::Unsupported(_) => "unsupported",
        Error::TooLarge { .. } => "too_large",
        Error::NotCyclicallyMonotone(_) => "not_cyclically_monotone",
        Error::HypothesisViolated { .. } => "hypothesis_violated",
        Error::Internal(_) => "internal",
    };
    let mut body = json!({ "error": { "kind": kind, "message": e.to_string() } });
    match e {
        Error::NotCyclicallyMonotone(v) => body["error"]["witness"] = json!(v.witness),
        Error::HypothesisViolated { direction } => body["error"]["direction"] = json!(direction),
        _ => {}
    }
    body
}

/// Command output: a JSON body, its optional CSV rendering, and whether it
/// reports a domain failure such as a violating cycle.
struct Outcome {
    body: Value,
    csv: Option<String>,
    failed: bool,
}

impl Outcome {
    fn ok(body: Value) -> Self {
        Outcome { body, csv: None, failed: false }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let name = cli.command.name();
    let seed = match &cli.command {
        Command::Ranks { seed, .. } => Some(*seed),
        Command::GenGrid { set: None, seed, .. } => Some(*seed),
        _ => None,
    };
    let header = |seed: Option<u64>| Header {
        tool: "mtl",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        timestamp: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()),
        seed,
    };
    let result = match cli.command {
        Command::Converge { config, out, csv } => converge(&config, &out, csv.as_deref())
            .and_then(|(seed, body)| emit(RunReport { header: header(Some(seed)), body, exit_code: 0 }, None)),
        command => {
            let output = match &command {
                Command::CheckMonotone { output, .. }
                | Command::SolveOt { output, .. }
                | Command::Potential { output, .. }
                | Command::EvalMap { output, .. }
                | Command::Hausdorff { output, .. }
                | Command::Ranks { output, .. }
                | Command::GenGrid { output, .. } => (output.out.clone(), output.format),
                Command::Converge { .. } => unreachable!("handled above"),
            };
            run(command).and_then(|o| {
                let code = u8::from(o.failed);
                let report = RunReport { header: header(seed), body: o.body, exit_code: code };
                match (output.1, o.csv) {
                    (Format::Csv, _) if code != 0 => emit(report, None),
                    (Format::Csv, Some(csv)) => write_text(output.0.as_deref(), &csv).map(|_| code),
                    (Format::Csv, None) => Err(Failure::Usage(format!("{name} has no CSV output"))),
                    (Format::Json, _) if code != 0 => emit(report, None),
                    (Format::Json, _) => emit(report, output.0.as_deref()),
                }
            })
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(body)) => {
            match emit(RunReport { header: header(seed), body, exit_code: 1 }, None) {
                Ok(_) => ExitCode::from(1),
                Err(_) => ExitCode::from(2),
            }
        }
    }
}

/// Writes the report and returns its exit code. Failed runs always go to
/// stdout.
fn emit(report: RunReport, out: Option<&Path>) -> Result<u8, Failure> {
    let code = report.exit_code;
    let text = to_canonical_json(&report).map_err(|e| Failure::Usage(e.to_string()))?;
    write_text(out, &text)?;
    Ok(code)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn csv_row(fields: impl IntoIterator<Item = String>) -> String {
    let mut line = fields.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::CheckMonotone { pairs, dim, tol, pairwise, .. } => {
            let s = load_points(&pairs, dim, Some(Expect::Pairs), None)?.into_pairs(&pairs)?;
            let verdict = if pairwise { is_monotone(&s, tol) } else { is_cyclically_monotone(&s, tol) };
            let failed = !verdict.holds;
            let body = json!({
                "check": if pairwise { "monotone" } else { "cyclically_monotone" },
                "dim": s.dim(),
                "holds": verdict.holds,
                "pairs": s.len(),
                "tol": tol,
                "witness": verdict.witness,
            });
            Ok(Outcome { body, csv: None, failed })
        }
        Command::SolveOt { source, target, dim, weights_col, .. } => {
            let p = load_points(&source, dim, Some(Expect::Measure), weights_col)?.into_measure(&source)?;
            let q = load_points(&target, dim, Some(Expect::Measure), weights_col)?.into_measure(&target)?;
            let pi = solve_discrete_ot(&p, &q)?;
            let certified = is_cyclically_monotone(&coupling_support(&pi, SUPPORT_FLOOR), DEFAULT_TOL).holds;
            let doc = CouplingDoc::from_coupling(&pi);
            let mut csv = csv_row(["i", "j", "mass"].map(String::from));
            for t in &doc.plan {
                csv.push_str(&csv_row([t.i.to_string(), t.j.to_string(), format_float(t.mass)]));
            }
            let support: Vec<Value> = doc
                .plan
                .iter()
                .map(|t| json!({ "mass": t.mass, "x": p.points().point(t.i), "y": q.points().point(t.j) }))
                .collect();
            let body = json!({
                "certified": certified,
                "cost": doc.cost,
                "support": support,
                "margin_error": pi.margin_error(),
                "plan": doc.plan,
                "source_size": p.len(),
                "target_size": q.len(),
            });
            Ok(Outcome { body, csv: Some(csv), failed: false })
        }
        Command::Potential { pairs, dim, base, tol, .. } => {
            let s = load_points(&pairs, dim, Some(Expect::Pairs), None)?.into_pairs(&pairs)?;
            if base >= s.len() {
                return Err(Failure::Usage(format!("--base {base} out of range for {} pairs", s.len())));
            }
            let psi = rockafellar_potential_with_tol(&s, base, tol)?;
            Ok(Outcome::ok(json!({ "pairs": s.len(), "potential": psi })))
        }
        Command::EvalMap { potential, queries, dim, tol, .. } => {
            let psi = load_potential(&potential)?;
            let qs = load_points(&queries, dim.or(Some(psi.dim())), Some(Expect::Points), None)?.into_cloud(&queries)?;
            let mut entries = Vec::with_capacity(qs.len());
            let mut csv = csv_row(
                ["query".to_string(), "vertex".to_string()]
                    .into_iter()
                    .chain((0..qs.dim()).map(|k| format!("x{k}")))
                    .chain((0..psi.dim()).map(|k| format!("y{k}"))),
            );
            for (q, x) in qs.iter().enumerate() {
                let sub = eval_subdifferential(&psi, x, tol)?;
                for (v, y) in sub.vertices.iter().enumerate() {
                    csv.push_str(&csv_row(
                        [q.to_string(), v.to_string()]
                            .into_iter()
                            .chain(x.iter().chain(y).map(|c| format_float(*c))),
                    ));
                }
                entries.push(json!({
                    "exact_hull": sub.reduced,
                    "value": psi.value(x)?,
                    "vertices": sub.vertices.to_rows(),
                    "x": x,
                }));
            }
            Ok(Outcome { body: json!({ "queries": entries, "tol": tol }), csv: Some(csv), failed: false })
        }
        Command::Hausdorff { a, b, dim, .. } => {
            let ca = load_points(&a, dim, Some(Expect::Points), None)?.into_cloud(&a)?;
            let cb = load_points(&b, dim, Some(Expect::Points), None)?.into_cloud(&b)?;
            let ab = directed_hausdorff(&ca, &cb)?;
            let ba = directed_hausdorff(&cb, &ca)?;
            Ok(Outcome::ok(json!({ "directed_ab": ab, "directed_ba": ba, "distance": ab.max(ba) })))
        }
        Command::Ranks { sample, nr, ns, n0, seed, dim, .. } => {
            let xs = load_points(&sample, dim, Some(Expect::Points), None)?.into_cloud(&sample)?;
            let grid = center_outward_grid(nr, ns, n0, xs.dim(), seed)?;
            let a = center_outward_ranks(&xs, &grid)?;
            let entries: Vec<Value> = a
                .assignment
                .iter()
                .enumerate()
                .map(|(i, &g)| {
                    let mut e = json!({
                        "grid": grid.points().point(g),
                        "grid_index": g,
                        "ring": grid.ring_of(g),
                        "sample": xs.point(i),
                        "sample_index": i,
                    });
                    if let Some(t) = grid.angle_of(g) {
                        e["angle"] = json!(t);
                    } else if let Some(u) = grid.direction_of(g) {
                        e["direction"] = json!(u);
                    }
                    e
                })
                .collect();
            let body = json!({
                "certified": a.certified,
                "cost": a.cost,
                "dim": xs.dim(),
                "entries": entries,
                "n0": n0,
                "nr": nr,
                "ns": ns,
                "origin_jitter": ORIGIN_JITTER,
            });
            Ok(Outcome { body, csv: None, failed: !a.certified })
        }
        Command::GenGrid { set, resolution, nr, ns, n0, dim, seed, .. } => {
            let points = match set {
                Some(path) => {
                    let desc: SetDescriptor = from_json(&read_text(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    desc.validate()?;
                    desc.grid_points(resolution.expect("clap requires --resolution"))?
                }
                None => {
                    let (nr, ns, dim) = (nr.expect("clap"), ns.expect("clap"), dim.expect("clap"));
                    center_outward_grid(nr, ns, n0.unwrap_or(0), dim, seed)?.points().clone()
                }
            };
            let mut csv = String::new();
            for p in points.iter() {
                csv.push_str(&csv_row(p.iter().map(|c| format_float(*c))));
            }
            let body = json!({ "count": points.len(), "dim": points.dim(), "points": points.to_rows() });
            Ok(Outcome { body, csv: Some(csv), failed: false })
        }
        Command::Converge { .. } => unreachable!("handled in main"),
    }
}

fn load_potential(path: &Path) -> Result<MaxAffinePotential, Failure> {
    let bad = |e: String| Failure::Usage(format!("{}: {e}", path.display()));
    let value: Value = from_json(&read_text(path)?).map_err(|e| bad(e.to_string()))?;
    let doc = match value.pointer("/body/potential").or_else(|| value.get("potential")) {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(doc).map_err(|e| bad(e.to_string()))
}

fn converge(config: &Path, out: &Path, csv: Option<&Path>) -> Result<(u64, Value), Failure> {
    let cfg: ExperimentConfig =
        from_json(&read_text(config)?).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    let report = run_consistency_experiment(&cfg)?;
    let text = to_canonical_json(&report)?;
    write_text(Some(out), &text)?;
    if let Some(path) = csv {
        let mut table = csv_row(["n", "rep", "metric", "value"].map(String::from));
        for (n, rep, metric, v) in report.long_rows() {
            table.push_str(&csv_row([n.to_string(), rep.to_string(), metric, format_float(v)]));
        }
        write_text(Some(path), &table)?;
    }
    let body = json!({
        "aggregates": report.aggregates,
        "csv": csv.map(|p| p.display().to_string()),
        "out": out.display().to_string(),
        "rows": report.rows.len(),
    });
    Ok((cfg.seed, body))
}
