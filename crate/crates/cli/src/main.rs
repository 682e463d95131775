//! `codedinv`: experiment runner for straggler-tolerant coded inversion.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use codedinv::brs::{suggest_params, validate_params};
use codedinv::estimate::{estimate_inverse_path, estimate_pseudoinverse_path};
use codedinv::io::{append_rows, join_ids, read_matrix_file, write_matrix, write_rows, RoundRow, TelemetryRow};
use codedinv::metrics::{error_metrics, ErrorMetrics};
use codedinv::pinv::{pinv_secure_variant, pinv_three_round, PinvRunConfig};
use codedinv::random::{derive_seed, gaussian_matrix, GeneratorSpec};
use codedinv::reference::{exact_inverse, exact_pseudoinverse};
use codedinv::scheme::{decode_ops_profile, simulate};
use codedinv::straggler::StragglerModel;
use codedinv::{Error, Method, RealMatrix, SchemeParams, SolverConfig};

#[derive(Parser)]
#[command(name = "codedinv", version, about = "Straggler-tolerant coded matrix inversion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coded inverse of a square matrix through simulated workers.
    Invert(RunArgs),
    /// Three-round coded left pseudoinverse of a tall matrix.
    Pinv {
        #[command(flatten)]
        run: RunArgs,
        /// Ship the Gram matrix to the workers as a secret share polynomial.
        #[arg(long)]
        secure: bool,
    },
    /// Mean single-server errors over seeded Gaussian trials.
    ErrorsTable(TableArgs),
    /// Decoding-matrix cost of the coded scheme against fractional repetition.
    DecodeOps(DecodeOpsArgs),
    /// Admissible (n, k) pairs.
    SuggestParams {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sd,
    Cg,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sd => Method::SteepestDescent,
            MethodArg::Cg => Method::ConjugateGradient,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "cg")]
    method: MethodArg,
    /// Per-column iteration cap; the solver default when omitted.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Number of workers.
    #[arg(long)]
    n: usize,
    /// Recovery threshold.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// `none`, 1-based ids `2,4,6`, `random:COUNT` or `exp:RATE`.
    #[arg(long, default_value = "none")]
    stragglers: String,
    /// Matrix generator `gaussian:ROWS:COLS:SCALE:SEED`.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    gen: Option<String>,
    /// Matrix CSV file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Where to write the estimate as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Telemetry CSV to append to.
    #[arg(long)]
    telemetry: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Target {
    Inverse,
    Pinv,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value = "inverse")]
    target: Target,
    /// Comma-separated tolerances; 1e-1..1e-5 for SD, 1e-3..1e-7 for CG.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Defaults to 100, or 50 columns for the pseudoinverse.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Defaults to 50 for the inverse and 1 for the pseudoinverse.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeOpsArgs {
    #[arg(long = "k", value_delimiter = ',', default_values_t = vec![3, 5, 9, 11])]
    k_values: Vec<usize>,
    /// Random responder sets averaged per k.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Stragglers charged to the repetition baseline.
    #[arg(long, default_value_t = 3)]
    rep_s: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TableRow {
    method: &'static str,
    target: &'static str,
    epsilon: f64,
    trials: usize,
    err_l2: f64,
    #[serde(rename = "err_F")]
    err_f: f64,
    #[serde(rename = "err_rF")]
    err_rf: f64,
    converged_fraction: f64,
}

#[derive(Serialize)]
struct ParamRow {
    n: usize,
    k: usize,
    d: usize,
    w: usize,
    s: usize,
    q: u64,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Argument(_) | Error::Parameter(_) | Error::Parse(_)) => 2,
        Some(Error::Unrecoverable { .. }) => 3,
        Some(Error::DecodeIntegrity(_) | Error::ReconstructionIntegrity { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if matches!(err.downcast_ref::<Error>(), Some(Error::Parameter(_))) {
                eprintln!("hint: `codedinv suggest-params` lists admissible (n, k)");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Invert(args) => cmd_invert(&args),
        Command::Pinv { run, secure } => cmd_pinv(&run, secure),
        Command::ErrorsTable(args) => cmd_errors_table(&args),
        Command::DecodeOps(args) => cmd_decode_ops(&args),
        Command::SuggestParams { n_min, n_max, out } => cmd_suggest_params(n_min, n_max, out.as_deref()),
    }
}

/// Runs `f` on the output file, or on stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> codedinv::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(&mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn load_matrix(args: &RunArgs) -> anyhow::Result<RealMatrix> {
    match (&args.gen, &args.input) {
        (Some(spec), _) => Ok(spec.parse::<GeneratorSpec>()?.generate()),
        (None, Some(path)) => {
            read_matrix_file(path).with_context(|| format!("cannot read {}", path.display()))
        }
        (None, None) => bail!(Error::Argument("one of --gen or --input is required".into())),
    }
}

fn solver_config(solver: &SolverArgs, eps: f64) -> SolverConfig {
    let cfg = SolverConfig::new(solver.method.into(), eps);
    match solver.max_iter {
        Some(cap) => cfg.with_max_iterations(cap),
        None => cfg,
    }
}

fn setup(args: &RunArgs) -> anyhow::Result<(RealMatrix, SchemeParams, SolverConfig, StragglerModel)> {
    let a = load_matrix(args)?;
    let params = validate_params(args.n, args.k, None)?;
    let cfg = solver_config(&args.solver, args.eps);
    cfg.validate()?;
    let straggle = args.stragglers.parse::<StragglerModel>()?.with_seed(args.seed);
    Ok((a, params, cfg, straggle))
}

fn print_errors(label: &str, m: &ErrorMetrics) {
    eprintln!("{label}: err_l2 {:.3e}, err_F {:.3e}, err_rF {:.3e}", m.l2, m.frobenius, m.relative_frobenius);
}

fn cmd_invert(args: &RunArgs) -> anyhow::Result<()> {
    let (a, params, cfg, straggle) = setup(args)?;
    let run = simulate(&a, &params, &cfg, &straggle, args.seed)?;
    let metrics = error_metrics(&run.decode.estimate, &exact_inverse(&a)?)?;
    eprintln!(
        "decoded from workers {} ({} online ops)",
        join_ids(&run.decode.responders),
        run.decode.online_ops
    );
    print_errors("error against the exact inverse", &metrics);
    if let Some(out) = &args.out {
        with_output(Some(out), |w| write_matrix(w, &run.decode.estimate))?;
    }
    if let Some(path) = &args.telemetry {
        let row = TelemetryRow {
            run_id: args.seed,
            n: params.n,
            k: params.k,
            s: params.s,
            order: a.rows(),
            epsilon: args.eps,
            method: cfg.method.short_name().into(),
            responders: join_ids(&run.decode.responders),
            decode_online_ops: run.decode.online_ops,
            err_l2: metrics.l2,
            err_f: metrics.frobenius,
            err_rf: metrics.relative_frobenius,
            wall_time_ms: run.wall_time_ms,
        };
        append_rows(path, &[row])?;
    }
    Ok(())
}

fn cmd_pinv(args: &RunArgs, secure: bool) -> anyhow::Result<()> {
    let (a, params, cfg, straggle) = setup(args)?;
    let config = PinvRunConfig::new(params, cfg).with_stragglers(straggle).with_seed(args.seed);
    let run = if secure {
        pinv_secure_variant(&a, &config)?
    } else {
        pinv_three_round(&a, &config)?
    };
    let metrics = error_metrics(&run.estimate, &exact_pseudoinverse(&a)?)?;
    for r in &run.rounds {
        eprintln!(
            "round {}: workers {}, sent {}, received {}",
            r.round,
            join_ids(&r.responders),
            r.symbols_sent,
            r.symbols_received
        );
    }
    print_errors("error against the exact pseudoinverse", &metrics);
    if let Some(out) = &args.out {
        with_output(Some(out), |w| write_matrix(w, &run.estimate))?;
    }
    if let Some(path) = &args.telemetry {
        let rows: Vec<RoundRow> = run
            .rounds
            .iter()
            .map(|r| RoundRow {
                run_id: args.seed,
                round: r.round,
                n: params.n,
                k: params.k,
                responders: join_ids(&r.responders),
                symbols_sent: r.symbols_sent,
                symbols_received: r.symbols_received,
            })
            .collect();
        append_rows(path, &rows)?;
    }
    Ok(())
}

fn cmd_errors_table(args: &TableArgs) -> anyhow::Result<()> {
    if args.trials == 0 {
        bail!(Error::Argument("--trials must be at least 1".into()));
    }
    let method: Method = args.solver.method.into();
    let mut grid = if args.eps.is_empty() {
        match method {
            Method::SteepestDescent => vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            Method::ConjugateGradient => vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
        }
    } else {
        args.eps.clone()
    };
    if grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        bail!(Error::Argument("tolerances must be positive".into()));
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let inverse = args.target == Target::Inverse;
    let rows = args.rows.unwrap_or(100);
    let cols = args.cols.unwrap_or(if inverse { rows } else { 50 });
    let scale = args.scale.unwrap_or(if inverse { 50.0 } else { 1.0 });
    let cfg = solver_config(&args.solver, 1.0);

    let mut sums = vec![Vec::with_capacity(args.trials); grid.len()];
    let mut converged = vec![0usize; grid.len()];
    for trial in 0..args.trials {
        let a = gaussian_matrix(rows, cols, scale, derive_seed(args.seed, trial as u64));
        let (reference, path) = if inverse {
            (exact_inverse(&a)?, estimate_inverse_path(&a, &cfg, &grid)?)
        } else {
            (exact_pseudoinverse(&a)?, estimate_pseudoinverse_path(&a, &cfg, &grid)?)
        };
        for (i, est) in path.iter().enumerate() {
            sums[i].push(error_metrics(&est.block, &reference)?);
            converged[i] += usize::from(est.all_converged);
        }
    }
    let table: Vec<TableRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let m = ErrorMetrics::mean(&sums[i]);
            TableRow {
                method: method.short_name(),
                target: if inverse { "inverse" } else { "pinv" },
                epsilon: eps,
                trials: args.trials,
                err_l2: m.l2,
                err_f: m.frobenius,
                err_rf: m.relative_frobenius,
                converged_fraction: converged[i] as f64 / args.trials as f64,
            }
        })
        .collect();
    with_output(args.out.as_deref(), |w| write_rows(w, &table))
}

fn cmd_decode_ops(args: &DecodeOpsArgs) -> anyhow::Result<()> {
    let rows = decode_ops_profile(&args.k_values, args.trials, args.rep_s, args.seed)?;
    with_output(args.out.as_deref(), |w| write_rows(w, &rows))
}

fn cmd_suggest_params(n_min: usize, n_max: usize, out: Option<&Path>) -> anyhow::Result<()> {
    if n_min > n_max {
        bail!(Error::Argument(format!("empty range {n_min}..={n_max}")));
    }
    let rows: Vec<ParamRow> = suggest_params(n_min, n_max)
        .into_iter()
        .map(|p| ParamRow {
            n: p.n,
            k: p.k,
            d: p.d,
            w: p.w,
            s: p.s,
            q: p.q,
        })
        .collect();
    with_output(out, |w| write_rows(w, &rows))
}
