//! `qcnc`: verification suites and single computations from the command line.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qc_core::conf::{normalize, vanishing_report, FlatOracle, JetOracle, LinearizedOracle, QJetTable};
use qc_core::geo::{parabolic_geodesic, PolyConnection};
use qc_core::invar::verify_reductions;
use qc_core::poly::{build_lm, random_homogeneous, HPoly};
use qc_core::qalg::Dim;
use qc_core::scalar::{format_rational, Scalar};
use qc_core::suite::{self, Provenance, Suite, SuiteConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use report::{CliError, RunReport};

#[derive(Parser, Debug)]
#[command(name = "qcnc", version, about = "Parabolic normal coordinates and conformal normalization for qc structures")]
struct Cli {
    /// Seed for every random choice; echoed in the report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Writes the full run report as JSON.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Arithmetic for suites that support both backends.
    #[arg(long, global = true, value_enum, default_value_t = ScalarKind::Rational)]
    scalar: ScalarKind,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum ScalarKind {
    Rational,
    F64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs acceptance suites.
    Verify {
        /// algebra, flat, geo, poly, curv, conf, coord, invar or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Integrates one parabolic geodesic.
    Geodesic(GeodesicArgs),
    /// Normalizes a conformal factor order by order.
    Normalize(NormalizeArgs),
    #[command(subcommand)]
    Poly(PolyCommand),
    #[command(subcommand)]
    Invar(InvarCommand),
    #[command(subcommand)]
    Curv(CurvCommand),
}

#[derive(Args, Debug)]
struct GeodesicArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// `flat`, `euclidean`, or a connection JSON file.
    #[arg(long, default_value = "flat")]
    connection: String,
    /// Base point (default: origin).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    q: Vec<f64>,
    /// Horizontal initial velocity.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Vertical initial acceleration.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    y: Vec<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Writes sampled points of the path as CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Dilation used for the scaling spot check.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum OracleKind {
    Linearized,
    Flat,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Highest order normalized.
    #[arg(long = "N", value_name = "N", default_value_t = 4)]
    max_order: usize,
    #[arg(long, value_enum, default_value_t = OracleKind::Linearized)]
    oracle: OracleKind,
    /// Base jet table for the linearized oracle (default: zero jets).
    #[arg(long, value_name = "PATH")]
    jets: Option<PathBuf>,
    /// Seed factor for the flat oracle (default: random weights 2 and 3).
    #[arg(long, value_name = "PATH")]
    factor: Option<PathBuf>,
    /// Fixed 1-jet, as a polynomial JSON file.
    #[arg(long, value_name = "PATH")]
    one_jet: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum PolyCommand {
    /// Rank, kernel and determinant of `L_m` on weight-m polynomials.
    LmSpectrum {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
}

#[derive(Subcommand, Debug)]
enum InvarCommand {
    /// Reduces every weight-four contraction to a multiple of `‖W‖²`.
    Reduce {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        trials: usize,
    },
}

#[derive(Subcommand, Debug)]
enum CurvCommand {
    /// Runs the curvature identities on sampled tensors.
    Verify {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    println!("seed: {}", cli.seed);
    let mut report = RunReport::new(command_name(&cli.command), config_echo(&cli), cli.seed);
    let outcome = dispatch(&cli, &mut report);
    report.seconds = start.elapsed().as_secs_f64();
    let code = match outcome {
        Ok(()) if report.pass() => 0,
        Ok(()) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            report.error = Some(e.to_string());
            e.exit_code()
        }
    };
    if let Some(path) = &cli.json_out {
        if let Err(e) = fs::write(path, serde_json::to_string_pretty(&report.to_json()).unwrap_or_default()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if code != 2 {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        println!("{} checks, {failed} failed, {:.2}s", report.checks.len(), report.seconds);
    }
    ExitCode::from(code)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Verify { .. } => "verify",
        Command::Geodesic(_) => "geodesic",
        Command::Normalize(_) => "normalize",
        Command::Poly(PolyCommand::LmSpectrum { .. }) => "poly lm-spectrum",
        Command::Invar(InvarCommand::Reduce { .. }) => "invar reduce",
        Command::Curv(CurvCommand::Verify { .. }) => "curv verify",
    }
}

fn config_echo(cli: &Cli) -> Value {
    let scalar = match cli.scalar {
        ScalarKind::Rational => "rational",
        ScalarKind::F64 => "f64",
    };
    let args = match &cli.command {
        Command::Verify { suite, n, trials } => json!({"suite": suite, "n": n, "trials": trials}),
        Command::Geodesic(g) => json!({
            "n": g.n, "connection": g.connection, "q": g.q, "x": g.x, "y": g.y, "s": g.s, "tol": g.tol,
            "trace": g.trace, "samples": g.samples, "lambda": g.lambda,
        }),
        Command::Normalize(a) => json!({
            "n": a.n, "N": a.max_order, "oracle": format!("{:?}", a.oracle).to_lowercase(),
            "jets": a.jets, "factor": a.factor, "one_jet": a.one_jet,
        }),
        Command::Poly(PolyCommand::LmSpectrum { n, m }) => json!({"n": n, "m": m}),
        Command::Invar(InvarCommand::Reduce { n, trials }) => json!({"n": n, "trials": trials}),
        Command::Curv(CurvCommand::Verify { n, trials }) => json!({"n": n, "trials": trials}),
    };
    json!({"scalar": scalar, "seed": cli.seed, "json_out": cli.json_out, "args": args})
}

fn dispatch(cli: &Cli, report: &mut RunReport) -> Result<(), CliError> {
    let exact = cli.scalar == ScalarKind::Rational;
    match &cli.command {
        Command::Verify { suite, n, trials } => {
            let cfg = SuiteConfig { n: *n, trials: *trials, exact, seed: cli.seed };
            run_suites(suite, cfg, report)
        }
        Command::Geodesic(args) => geodesic(args, report),
        Command::Normalize(args) => normalize_cmd(args, cli.seed, report),
        Command::Poly(PolyCommand::LmSpectrum { n, m }) => lm_spectrum(*n, *m, report),
        Command::Invar(InvarCommand::Reduce { n, trials }) => invar_reduce(*n, *trials, exact, cli.seed, report),
        Command::Curv(CurvCommand::Verify { n, trials }) => {
            let cfg = SuiteConfig { n: Some(*n), trials: *trials, exact, seed: cli.seed };
            run_suites("curv", cfg, report)
        }
    }
}

fn dim(n: usize) -> Result<Dim, CliError> {
    Dim::new(n).map_err(|e| CliError::Usage(format!("--n: {e}")))
}

fn run_suites(name: &str, cfg: SuiteConfig, report: &mut RunReport) -> Result<(), CliError> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse().map_err(|e: suite::SuiteError| CliError::Usage(e.to_string()))?]
    };
    if let Some(n) = cfg.n {
        dim(n)?;
    }
    for s in suites {
        let r = suite::run(s, cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        let verdict = if r.pass() { "PASS" } else { "FAIL" };
        println!("criterion {} ({}): {verdict} [{} checks, {:.1}s]", s.criterion(), s.title(), r.checks.len(), r.seconds);
        for c in r.failures() {
            println!("  failed: {}: {} (tolerance {})", c.name, c.measured, c.tolerance);
            if let Some(ce) = &c.counterexample {
                println!("    counterexample: {ce}");
            }
        }
        report.sections.push(r.to_json());
        report.checks.extend(r.checks);
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("{}: malformed JSON: {e}", path.display()))
    })
}

fn vector(name: &str, v: &[f64], len: usize) -> Result<Vec<f64>, CliError> {
    match v.len() {
        0 => Ok(vec![0.0; len]),
        l if l == len => Ok(v.to_vec()),
        l => Err(CliError::Usage(format!("--{name} has {l} entries, expected {len}"))),
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn geodesic(args: &GeodesicArgs, report: &mut RunReport) -> Result<(), CliError> {
    let conn = match args.connection.as_str() {
        "flat" => PolyConnection::flat(dim(args.n)?),
        "euclidean" => PolyConnection::euclidean(dim(args.n)?),
        path => PolyConnection::from_json(&read_json(Path::new(path))?).map_err(|e| CliError::Usage(format!("{path}: {e}")))?,
    };
    let d = conn.total();
    let q = vector("q", &args.q, d)?;
    let x = vector("x", &args.x, d)?;
    let y = vector("y", &args.y, d)?;
    let usage = |e: qc_core::geo::GeoError| CliError::Usage(e.to_string());
    if !(args.tol > 0.0) {
        return Err(usage(qc_core::geo::GeoError::BadTolerance(args.tol)));
    }
    let end = parabolic_geodesic(&conn, &q, &x, &y, args.s, args.tol).map_err(|e| CliError::Compute(e.to_string()))?;
    println!("gamma(s) = {}", fmt_vec(&end));
    report.data.insert("endpoint".into(), json!(end));

    if let Some(path) = &args.trace {
        let samples = args.samples.max(1);
        let mut csv = String::from("s");
        for a in 0..d {
            csv.push_str(&format!(",z{a}"));
        }
        csv.push('\n');
        for k in 0..=samples {
            let s = args.s * k as f64 / samples as f64;
            let p = parabolic_geodesic(&conn, &q, &x, &y, s, args.tol).map_err(|e| CliError::Compute(e.to_string()))?;
            csv.push_str(&format!("{s:.15e}"));
            for v in p {
                csv.push_str(&format!(",{v:.15e}"));
            }
            csv.push('\n');
        }
        fs::write(path, csv).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        println!("trace: {} ({} samples)", path.display(), samples + 1);
    }

    // γ_{(λX, λ²Y)}(s) = γ_{(X,Y)}(λs).
    let l = args.lambda;
    let xs: Vec<f64> = x.iter().map(|v| l * v).collect();
    let ys: Vec<f64> = y.iter().map(|v| l * l * v).collect();
    let a = parabolic_geodesic(&conn, &q, &xs, &ys, args.s, args.tol).map_err(|e| CliError::Compute(e.to_string()))?;
    let b = parabolic_geodesic(&conn, &q, &x, &y, l * args.s, args.tol).map_err(|e| CliError::Compute(e.to_string()))?;
    let dev = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let tol = (1e3 * args.tol).max(1e-9);
    report.push(format!("scaling spot check (lambda = {l})"), dev <= tol, format!("{dev:.3e}"), format!("{tol:.1e}"), Provenance::Identity);
    Ok(())
}

fn x_only(mut p: HPoly) -> HPoly {
    let h = p.dim.h();
    p.terms.retain(|m, _| m.t_degree(h) == 0);
    p
}

fn normalize_cmd(args: &NormalizeArgs, seed: u64, report: &mut RunReport) -> Result<(), CliError> {
    if args.max_order < 2 {
        return Err(CliError::Usage(format!("--N must be at least 2, got {}", args.max_order)));
    }
    let dim = dim(args.n)?;
    let poly = |path: &Path| -> Result<HPoly, CliError> {
        HPoly::from_json(dim, &read_json(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    };
    let one_jet = args.one_jet.as_deref().map(poly).transpose()?;
    let oracle: Box<dyn JetOracle> = match args.oracle {
        OracleKind::Linearized => {
            let base = match &args.jets {
                Some(p) => QJetTable::from_json(&read_json(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
                None => QJetTable::zero(dim, args.max_order),
            };
            if base.dim != dim {
                return Err(CliError::Usage(format!("jet table has n = {}, expected {}", base.dim.n(), dim.n())));
            }
            Box::new(LinearizedOracle::new(base))
        }
        OracleKind::Flat => {
            let seed_factor = match &args.factor {
                Some(p) => poly(p)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    x_only(random_homogeneous(dim, 2, &mut rng)).add(&random_homogeneous(dim, 3, &mut rng))
                }
            };
            println!("seed factor v = {seed_factor}");
            report.data.insert("seed_factor".into(), seed_factor.to_json());
            Box::new(FlatOracle::new(dim, args.max_order, seed_factor))
        }
    };
    let result = normalize(args.max_order, oracle.as_ref(), one_jet).map_err(|e| CliError::Compute(e.to_string()))?;
    for m in 2..=args.max_order {
        println!("u_{m} = {}", result.factor.piece(m));
    }
    report.data.insert("factor".into(), result.factor.to_json());
    let residual = result.jets.nonzero_through(args.max_order);
    report.push(
        format!("symmetrized jets vanish through order {}", args.max_order),
        residual.is_empty(),
        format!("{} nonzero", residual.len()),
        "exact".into(),
        Provenance::Identity,
    );
    if args.max_order >= 4 {
        match vanishing_report(&result.jets) {
            Ok(list) => {
                let items: Vec<Value> = list
                    .iter()
                    .map(|v| {
                        println!("vanishes: {} (order {}): {}", v.quantity, v.order, v.reason);
                        json!({"quantity": v.quantity, "order": v.order, "reason": v.reason})
                    })
                    .collect();
                report.data.insert("vanishing".into(), Value::Array(items));
                report.push("vanishing report".into(), true, format!("{} quantities", list.len()), "exact".into(), Provenance::Identity);
            }
            Err(e) => report.push("vanishing report".into(), false, e.to_string(), "exact".into(), Provenance::Identity),
        }
    }
    Ok(())
}

fn lm_spectrum(n: usize, m: usize, report: &mut RunReport) -> Result<(), CliError> {
    let dim = dim(n)?;
    let op = build_lm(dim, m).map_err(|e| CliError::Usage(e.to_string()))?;
    let size = op.basis.len();
    let kernel: Vec<HPoly> = op
        .matrix
        .nullspace()
        .into_iter()
        .map(|v| {
            let mut p = HPoly::zero(dim);
            for (mono, c) in op.basis.iter().zip(v) {
                p.add_term(*mono, c);
            }
            p
        })
        .collect();
    let rank = size - kernel.len();
    println!("L_{m} on weight {m}: dimension {size}, rank {rank}");
    for p in &kernel {
        println!("kernel: {p}");
    }
    let det = if kernel.is_empty() { Some(op.matrix.det()) } else { None };
    if let Some(d) = &det {
        println!("det = {}", format_rational(d));
    }
    report.data.insert(
        "spectrum".into(),
        json!({
            "m": m,
            "dimension": size,
            "rank": rank,
            "kernel": kernel.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
            "det": det.as_ref().map(format_rational),
        }),
    );
    if m == 2 {
        let t_only = kernel.len() == 3 && kernel.iter().all(|p| p.depends_on_t() && x_only(p.clone()).is_zero());
        report.push("kernel of L_2 is spanned by t".into(), t_only, format!("{} kernel vectors", kernel.len()), "exact".into(), Provenance::Identity);
    } else {
        let ok = det.as_ref().is_some_and(|d| !Scalar::is_zero(d));
        report.push(format!("L_{m} is invertible"), ok, format!("rank {rank} of {size}"), "exact".into(), Provenance::Identity);
    }
    Ok(())
}

fn invar_reduce(n: usize, trials: usize, exact: bool, seed: u64, report: &mut RunReport) -> Result<(), CliError> {
    let dim = dim(n)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = verify_reductions(dim, trials, exact, 1e-12, &mut rng).map_err(|e| CliError::Compute(e.to_string()))?;
    for p in &r.patterns {
        let value = match &p.exact {
            Some(q) => format_rational(q),
            None => format!("{:.12}", p.constant),
        };
        let mark = if p.stable { "" } else { "  (unstable)" };
        println!("{}  =  {value} |W|^2{mark}", p.pattern);
    }
    for c in &r.checks {
        let tol = if exact { "exact" } else { "1e-12" };
        report.push(format!("reduction {}", c.name), c.pass, c.measured.clone(), tol.into(), Provenance::Regression);
    }
    report.sections.push(r.to_json());
    Ok(())
}
